//! Minibatch SGD with momentum on mean absolute error.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::mlp::{l1_loss_grad, Mlp, Normalizer};

/// Everything that determines a training run; two runs with equal configs
/// and data produce bitwise-equal nets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Multiply the learning rate by `decay_factor` every `decay_every`
    /// epochs (0 disables the schedule).
    pub decay_every: usize,
    pub decay_factor: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![64, 64],
            epochs: 150,
            batch_size: 64,
            learning_rate: 0.02,
            momentum: 0.9,
            decay_every: 50,
            decay_factor: 0.3,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    // The negated comparisons reject NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("learning_rate must be > 0 and momentum in [0, 1)"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction <= 0.5) {
            return Err(Error::config("val_fraction must be in (0, 0.5]"));
        }
        if self.decay_every > 0 && !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::config("decay_factor must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Loss history of a finished run, in raw target units.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub train_l1: Vec<f64>,
    pub val_l1: Vec<f64>,
    pub final_train_l1: f64,
    pub final_val_l1: f64,
}

/// Trains a net on `(xs, ys)` rows. The split and every shuffle come from
/// `cfg.seed`; normalizers are fitted on the training split only and frozen
/// into the returned net. Fails if the loss leaves the reals.
pub fn train(xs: &[Vec<f64>], ys: &[Vec<f64>], cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    cfg.validate()?;
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::config("training rows empty or mismatched"));
    }
    let d_in = xs[0].len();
    let d_out = ys[0].len();
    if xs.iter().any(|x| x.len() != d_in) || ys.iter().any(|y| y.len() != d_out) {
        return Err(Error::config("ragged training rows"));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((xs.len() as f64) * cfg.val_fraction).floor() as usize;
    let n_val = n_val.min(xs.len().saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| xs[i].clone()).collect();
    let train_y: Vec<Vec<f64>> = train_idx.iter().map(|&i| ys[i].clone()).collect();
    let val_x: Vec<Vec<f64>> = val_idx.iter().map(|&i| xs[i].clone()).collect();
    let val_y: Vec<Vec<f64>> = val_idx.iter().map(|&i| ys[i].clone()).collect();

    let mut sizes = vec![d_in];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(d_out);
    let mut mlp = Mlp::init(
        &sizes,
        Normalizer::fit(&train_x),
        Normalizer::fit(&train_y),
        cfg.seed,
    )?;

    let mut velocity = vec![0.0; mlp.n_params()];
    let mut lr = cfg.learning_rate;
    let mut report = TrainReport {
        train_l1: Vec::with_capacity(cfg.epochs),
        val_l1: Vec::with_capacity(cfg.epochs),
        final_train_l1: f64::NAN,
        final_val_l1: f64::NAN,
    };

    for epoch in 0..cfg.epochs {
        if cfg.decay_every > 0 && epoch > 0 && epoch % cfg.decay_every == 0 {
            lr *= cfg.decay_factor;
        }
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.batch_size) {
            let bx: Vec<&Vec<f64>> = chunk.iter().map(|&i| &xs[i]).collect();
            let by: Vec<&Vec<f64>> = chunk.iter().map(|&i| &ys[i]).collect();
            let (loss, grad) = l1_loss_grad(&mlp, &bx, &by);
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "training loss diverged at epoch {epoch}"
                )));
            }
            let mut params = mlp.params_flat();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - lr * g;
                *p += *v;
            }
            mlp.set_params_flat(&params);
        }
        report.train_l1.push(mlp.l1_error(&train_x, &train_y));
        report.val_l1.push(if val_x.is_empty() {
            f64::NAN
        } else {
            mlp.l1_error(&val_x, &val_y)
        });
    }
    report.final_train_l1 = *report.train_l1.last().unwrap();
    report.final_val_l1 = *report.val_l1.last().unwrap();
    if !report.final_train_l1.is_finite() {
        return Err(Error::Numerical("final training loss is not finite".into()));
    }
    Ok((mlp, report))
}
