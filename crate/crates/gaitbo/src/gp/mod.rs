//! Gaussian-process surrogate and Bayesian optimization.
//!
//! The GP runs over a feature space chosen by the kernel: raw controller
//! parameters for the plain SE baseline, or the outputs of a trained net
//! for the informed kernels. Conditioning caches a Cholesky factor of the
//! noisy Gram matrix; hyperparameters are refit by marginal likelihood
//! between trials; acquisition maximizes Expected Improvement over a
//! seeded candidate pool. Every stage is deterministic per seed.

mod acquisition;
mod bo;
mod hyperfit;
mod kernel;
mod state;

pub use acquisition::{acquire_next, acquire_next_features, candidate_set, expected_improvement};
pub use bo::{bo_run, BoResult, BoSettings, BoTrial};
pub use hyperfit::{default_hyper, default_log_bounds, feature_ranges, fit_hyperparams, FitOutcome, LogBounds};
pub use kernel::{kernel_eval, kernel_features, FeatureMap, Hyper, TRAJ_FEATURES};
pub use state::{GpState, MeanPolicy};
