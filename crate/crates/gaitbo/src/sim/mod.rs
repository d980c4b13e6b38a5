//! Deterministic planar walker.
//!
//! The plant is a rigid torso with massless legs.  During stance the
//! controller commands a contact force at the stance foot: the horizontal
//! component servos torso pitch, the vertical component servos CoM height on
//! top of a nominal-weight feedforward.  Forward speed is regulated purely by
//! Raibert foot placement; placing the foot behind the CoM tips the body
//! forward and the pitch servo converts the lean into thrust.
//!
//! Support exchanges happen when the step clock reaches the active step
//! duration, or earlier if the swing foot strikes rough ground.  All rollouts
//! are fixed-step and bit-deterministic.

mod config;
mod controller;
mod dynamics;
mod rollout;
pub mod perturb;

pub use config::{
    Bounds, ControllerFamily, GroundProfile, PerturbationFactors, SimConfig, SpeedSegment,
    StepGains, SwingShape, DEFAULT_APEX,
};
pub use controller::{
    eval_quintic, eval_quintic_rate, plan_touchdown, quintic_apex, quintic_boundary,
    stance_forces, Quintic, StancePd, SwingTrajectory,
};
pub use dynamics::{step_dynamics, BodyState, Plant, StanceLaw};
pub use perturb::{perturbation_factors, rough_ground};
pub use rollout::{rollout, rollout_traced, TrajectorySummary, WalkerState};
