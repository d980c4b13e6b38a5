//! Marginal-likelihood hyperparameter fitting.
//!
//! Maximization runs in log space over a data-scaled box: length scales
//! relative to the observed feature ranges, variances relative to the
//! observed cost variance. The optimizer is a seeded multi-start
//! Nelder-Mead, so a fit is reproducible and needs no gradients of the
//! likelihood.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::gp::kernel::Hyper;
use crate::gp::state::{GpState, MeanPolicy};

/// Box in log-hyperparameter space, layout [signal2, lengths.., noise2].
#[derive(Debug, Clone)]
pub struct LogBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LogBounds {
    pub fn clamp(&self, theta: &mut [f64]) {
        for ((t, lo), hi) in theta.iter_mut().zip(&self.lo).zip(&self.hi) {
            *t = t.clamp(*lo, *hi);
        }
    }
}

/// Per-dimension span of a feature set, floored at 1e-6.
pub fn feature_ranges(features: &[Vec<f64>]) -> Vec<f64> {
    let dim = features.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for f in features {
        for j in 0..dim {
            lo[j] = lo[j].min(f[j]);
            hi[j] = hi[j].max(f[j]);
        }
    }
    (0..dim).map(|j| (hi[j] - lo[j]).max(1e-6)).collect()
}

fn variance(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 1.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.max(1e-12)
}

/// Data-relative box: lengths in [1e-3, 1e2] of each feature range,
/// signal variance in [1e-4, 1e4] of var(y), noise in [1e-8, 1] of var(y).
pub fn default_log_bounds(ranges: &[f64], y: &[f64]) -> LogBounds {
    let var_y = variance(y);
    let mut lo = vec![(1e-4 * var_y).ln()];
    let mut hi = vec![(1e4 * var_y).ln()];
    for r in ranges {
        lo.push((1e-3 * r).ln());
        hi.push((1e2 * r).ln());
    }
    lo.push((1e-8 * var_y).ln());
    hi.push(var_y.ln());
    LogBounds { lo, hi }
}

/// Fallback hyperparameters used below 3 observations: the geometric
/// center of the box, which for `default_log_bounds` works out to
/// lengths near a third of each feature range, signal at var(y), and
/// noise at 1e-4 var(y).
pub fn default_hyper(bounds: &LogBounds) -> Hyper {
    let mid: Vec<f64> = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(l, h)| 0.5 * (l + h))
        .collect();
    Hyper::from_log(&mid)
}

/// Fit result; `fell_back` marks a fit where every start failed to
/// factorize and the previous hyperparameters were kept.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub hyper: Hyper,
    pub fell_back: bool,
}

fn neg_lml(features: &[Vec<f64>], y: &[f64], policy: MeanPolicy, theta: &[f64]) -> f64 {
    let hyper = Hyper::from_log(theta);
    match GpState::fit(features.to_vec(), y.to_vec(), hyper, policy) {
        Ok(gp) => {
            let lml = gp.log_marginal();
            if lml.is_finite() {
                -lml
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// One Nelder-Mead descent clamped to the box. Returns the best vertex.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    bounds: &LogBounds,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    simplex.push(start.clone());
    for j in 0..d {
        let mut v = start.clone();
        let step = 0.15 * (bounds.hi[j] - bounds.lo[j]);
        v[j] = if v[j] + step <= bounds.hi[j] {
            v[j] + step
        } else {
            v[j] - step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[d];
        let second_worst = order[d - 1];
        if values[worst] - values[best] < 1e-10 * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; d];
        for &i in &order[..d] {
            for j in 0..d {
                centroid[j] += simplex[i][j] / d as f64;
            }
        }
        let mut reflected: Vec<f64> = (0..d)
            .map(|j| centroid[j] + (centroid[j] - simplex[worst][j]))
            .collect();
        bounds.clamp(&mut reflected);
        let fr = f(&reflected);

        if fr < values[best] {
            let mut expanded: Vec<f64> = (0..d)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]))
                .collect();
            bounds.clamp(&mut expanded);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let mut contracted: Vec<f64> = (0..d)
                .map(|j| centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]))
                .collect();
            bounds.clamp(&mut contracted);
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink everything toward the best vertex
                let anchor = simplex[best].clone();
                for i in 0..=d {
                    if i == best {
                        continue;
                    }
                    for j in 0..d {
                        simplex[i][j] = anchor[j] + 0.5 * (simplex[i][j] - anchor[j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..=d {
        if values[i] < values[best_i] {
            best_i = i;
        }
    }
    (simplex[best_i].clone(), values[best_i])
}

/// Maximizes the marginal likelihood from four starts: the previous
/// hyperparameters, the box-center defaults, and two seeded random box
/// points. Below 3 observations the defaults are returned untouched.
pub fn fit_hyperparams(
    features: &[Vec<f64>],
    y: &[f64],
    policy: MeanPolicy,
    bounds: &LogBounds,
    prev: &Hyper,
    seed: u64,
) -> FitOutcome {
    if y.len() < 3 {
        return FitOutcome {
            hyper: default_hyper(bounds),
            fell_back: false,
        };
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dim = bounds.lo.len();

    let mut starts = vec![prev.to_log(), default_hyper(bounds).to_log()];
    for _ in 0..2 {
        starts.push(
            (0..dim)
                .map(|j| bounds.lo[j] + rng.random::<f64>() * (bounds.hi[j] - bounds.lo[j]))
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        let (theta, val) = nelder_mead(
            |t| neg_lml(features, y, policy, t),
            start,
            bounds,
            200,
        );
        if val.is_finite() && best.as_ref().is_none_or(|(_, b)| val < *b) {
            best = Some((theta, val));
        }
    }
    match best {
        Some((theta, _)) => FitOutcome {
            hyper: Hyper::from_log(&theta),
            fell_back: false,
        },
        None => FitOutcome {
            hyper: prev.clone(),
            fell_back: true,
        },
    }
}
