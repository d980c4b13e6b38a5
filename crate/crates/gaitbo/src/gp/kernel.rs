//! Squared-exponential kernels over raw or learned features.

use crate::error::{Error, Result};
use crate::nnet::Mlp;

/// How controller parameters are embedded before the kernel distance.
/// `Identity` is the uninformed baseline; the other two run a trained net
/// and measure distance in its output space, so parameters the net maps to
/// similar predictions look similar to the GP.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    Identity,
    /// Scalar predicted score; all poorly performing parameters collapse
    /// toward zero, pulling them into one kernel neighborhood.
    ScoreNet(Mlp),
    /// Predicted 8-element trajectory summary; cost-agnostic.
    TrajNet(Mlp),
}

pub const TRAJ_FEATURES: usize = 8;

impl FeatureMap {
    pub fn score_net(net: Mlp) -> Result<Self> {
        if net.n_outputs() != 1 {
            return Err(Error::Model(format!(
                "score net must have 1 output, found {}",
                net.n_outputs()
            )));
        }
        Ok(FeatureMap::ScoreNet(net))
    }

    pub fn traj_net(net: Mlp) -> Result<Self> {
        if net.n_outputs() != TRAJ_FEATURES {
            return Err(Error::Model(format!(
                "trajectory net must have {TRAJ_FEATURES} outputs, found {}",
                net.n_outputs()
            )));
        }
        Ok(FeatureMap::TrajNet(net))
    }

    /// Feature dimension for a given input dimension.
    pub fn dim(&self, input_dim: usize) -> usize {
        match self {
            FeatureMap::Identity => input_dim,
            FeatureMap::ScoreNet(_) => 1,
            FeatureMap::TrajNet(_) => TRAJ_FEATURES,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FeatureMap::Identity => "se",
            FeatureMap::ScoreNet(_) => "asymNN",
            FeatureMap::TrajNet(_) => "trajNN",
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => x.to_vec(),
            FeatureMap::ScoreNet(net) | FeatureMap::TrajNet(net) => net.predict(x),
        }
    }
}

/// Kernel hyperparameters: signal variance, one length scale per feature
/// dimension, observation noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub signal2: f64,
    pub length: Vec<f64>,
    pub noise2: f64,
}

impl Hyper {
    pub fn new(signal2: f64, length: Vec<f64>, noise2: f64) -> Result<Self> {
        let h = Hyper {
            signal2,
            length,
            noise2,
        };
        h.validate()?;
        Ok(h)
    }

    // The negated comparisons reject NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.signal2 > 0.0) || !(self.noise2 >= 0.0) {
            return Err(Error::config(
                "signal variance must be positive and noise variance nonnegative",
            ));
        }
        if self.length.is_empty() || self.length.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::config("length scales must be positive"));
        }
        Ok(())
    }

    /// Layout used by the optimizer: [log signal2, log lengths.., log noise2].
    pub fn to_log(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.length.len() + 2);
        v.push(self.signal2.ln());
        v.extend(self.length.iter().map(|l| l.ln()));
        v.push(self.noise2.max(1e-300).ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Self {
        Hyper {
            signal2: theta[0].exp(),
            length: theta[1..theta.len() - 1].iter().map(|t| t.exp()).collect(),
            noise2: theta[theta.len() - 1].exp(),
        }
    }
}

/// SE form on precomputed features: signal2 * exp(-1/2 * sum (df/l)^2).
pub fn kernel_features(hyper: &Hyper, fi: &[f64], fj: &[f64]) -> f64 {
    let mut q = 0.0;
    for ((a, b), l) in fi.iter().zip(fj).zip(&hyper.length) {
        let d = (a - b) / l;
        q += d * d;
    }
    hyper.signal2 * (-0.5 * q).exp()
}

/// Kernel value between two raw parameter points.
pub fn kernel_eval(feature: &FeatureMap, hyper: &Hyper, xi: &[f64], xj: &[f64]) -> f64 {
    kernel_features(hyper, &feature.apply(xi), &feature.apply(xj))
}
