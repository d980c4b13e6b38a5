//! Small dense networks used to embed controller parameters.
//!
//! Nets are trained on simulated rollouts to predict either the scalar
//! score or the trajectory summary of a parameter point. Everything is
//! plain `f64` with deterministic seeded initialization and shuffling, so a
//! training run is reproducible down to the last bit.

mod io;
mod mlp;
mod train;

pub use io::{model_from_string, model_to_string, read_model, write_model};
pub use mlp::{gradient_check, GradCheck, Mlp, Normalizer};
pub use train::{train, TrainConfig, TrainReport};
