//! Planar biped walking, surrogate models, and Bayesian optimization.
//!
//! The crate is organized bottom-up:
//!
//! * [`sim`] - a deterministic planar walker (rigid torso, massless legs,
//!   Raibert-style foot placement) with model perturbations and rough ground.
//! * [`costs`] - scalar gait costs over rollout summaries plus the score
//!   transform used as a regression target.
//! * [`data`] - Sobol parameter grids and CSV gait datasets.
//! * [`nnet`] - a small from-scratch MLP (L1 loss, SGD with momentum) used as
//!   a feature map for kernels.
//! * [`gp`] - Gaussian process regression, learned-feature kernels, expected
//!   improvement, and the optimization loop.
//! * [`cli`] - the `gaitbo` command line driving dataset generation, network
//!   training, optimization runs, and aggregation.

pub mod cli;
pub mod costs;
pub mod data;
pub mod error;
pub mod gp;
pub mod nnet;
pub mod sim;

pub use error::{Error, Result};
