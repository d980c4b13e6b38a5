use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of the target-speed schedule: hold `v_tgt` for `steps` support
/// exchanges.  The last segment absorbs any remaining steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSegment {
    pub steps: u32,
    /// Target forward speed [m/s].
    pub v_tgt: f64,
}

/// Physical plant and fixed controller constants for the planar walker.
///
/// The torso is a rigid body; legs are massless force transmitters, so the
/// only inertial parameters are the torso's.  `com_offset` is the fore-aft
/// displacement of the CoM from the torso reference point along the body
/// axis, which is also the quantity the onboard controller believes it knows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Torso mass [kg].
    pub torso_mass: f64,
    /// Torso pitch inertia about the CoM [kg m^2].
    pub torso_inertia: f64,
    /// Fore-aft CoM offset from the torso reference point [m].
    pub com_offset: f64,
    /// Leg length [m], sets the swing geometry scale.
    pub leg_length: f64,
    /// Gravity [m/s^2].
    pub gravity: f64,
    /// Desired CoM height during stance [m].
    pub z_des: f64,
    /// Desired torso pitch [rad].
    pub theta_des: f64,
    /// Vertical stance stiffness [N/m].
    pub k_pz: f64,
    /// Vertical stance damping [N s/m].
    pub k_dz: f64,
    /// Integrator step [s].
    pub timestep: f64,
    /// Rollout horizon [s].
    pub horizon: f64,
    /// Fall threshold on CoM height [m].
    pub z_min: f64,
    /// Fall threshold on |pitch| [rad].
    pub theta_max: f64,
    pub schedule: Vec<SpeedSegment>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let z_des = 0.85;
        SimConfig {
            torso_mass: 32.0,
            torso_inertia: 2.2,
            com_offset: 0.05,
            leg_length: 0.9,
            gravity: 9.81,
            z_des,
            theta_des: 0.0,
            k_pz: 3000.0,
            k_dz: 420.0,
            timestep: 1e-3,
            horizon: 3.5,
            z_min: 0.5 * z_des,
            theta_max: 1.0,
            schedule: vec![SpeedSegment {
                steps: u32::MAX,
                v_tgt: 1.0,
            }],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("torso_mass", self.torso_mass),
            ("torso_inertia", self.torso_inertia),
            ("leg_length", self.leg_length),
            ("gravity", self.gravity),
            ("z_des", self.z_des),
            ("timestep", self.timestep),
            ("horizon", self.horizon),
            ("z_min", self.z_min),
            ("theta_max", self.theta_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("com_offset", self.com_offset),
            ("theta_des", self.theta_des),
            ("k_pz", self.k_pz),
            ("k_dz", self.k_dz),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.z_min >= self.z_des {
            return Err(Error::config(format!(
                "z_min ({}) must be below z_des ({})",
                self.z_min, self.z_des
            )));
        }
        if self.horizon < self.timestep {
            return Err(Error::config("horizon shorter than one timestep"));
        }
        if self.schedule.is_empty() {
            return Err(Error::config("schedule must have at least one segment"));
        }
        for seg in &self.schedule {
            if seg.steps == 0 {
                return Err(Error::config("schedule segment with zero steps"));
            }
            if !seg.v_tgt.is_finite() {
                return Err(Error::config("schedule v_tgt must be finite"));
            }
        }
        Ok(())
    }

    /// Target speed of every schedule segment, in order.
    pub fn target_speeds(&self) -> Vec<f64> {
        self.schedule.iter().map(|s| s.v_tgt).collect()
    }
}

/// Axis-aligned box in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Bounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        let b = Bounds { low, high };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.low.len() != self.high.len() {
            return Err(Error::config(format!(
                "bounds dimension mismatch: {} lows vs {} highs",
                self.low.len(),
                self.high.len()
            )));
        }
        if self.low.is_empty() {
            return Err(Error::config("bounds must have at least one dimension"));
        }
        for (i, (&lo, &hi)) in self.low.iter().zip(&self.high).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::config(format!("bounds[{i}] must be finite")));
            }
            if lo > hi {
                return Err(Error::config(format!(
                    "bounds[{i}] inverted: low {lo} > high {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.low.iter().zip(&self.high)) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Map a unit-cube point into the box.
    pub fn lerp(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
            .collect()
    }

    pub fn sample_uniform<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        let unit: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.lerp(&unit)
    }

    pub fn span(&self) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(&lo, &hi)| hi - lo)
            .collect()
    }
}

/// Per-step controller gains, resolved for the active speed segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepGains {
    /// Foot placement feedback on speed error [s].
    pub k: f64,
    /// Foot placement offset on stance distance [-].
    pub c: f64,
    /// Step duration [s].
    pub t_step: f64,
    /// Pitch stiffness [N/rad].
    pub k_pt: f64,
    /// Pitch damping [N s/rad].
    pub k_dt: f64,
}

/// Swing-foot trajectory shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwingShape {
    /// Mid-swing apex height above the higher endpoint [m].
    pub apex: f64,
    /// Horizontal retraction speed at touchdown [m/s].
    pub retract: f64,
}

/// Fixed swing clearance for the 5-gain family [m].
pub const DEFAULT_APEX: f64 = 0.07;

/// Controller parameterizations exposed to the optimizer.
///
/// `Gains5` is the basic set `[k, c, t_step, k_pt, k_dt]`.  `PhaseGains13`
/// splits `[k, c, t_step]` per speed-schedule phase (three phases) and adds
/// shared pitch gains plus the two swing-shape parameters:
/// `[k0, c0, t0, k1, c1, t1, k2, c2, t2, k_pt, k_dt, apex, retract]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerFamily {
    Gains5,
    PhaseGains13,
}

impl ControllerFamily {
    pub fn dim(&self) -> usize {
        match self {
            ControllerFamily::Gains5 => 5,
            ControllerFamily::PhaseGains13 => 13,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControllerFamily::Gains5 => "gains5",
            ControllerFamily::PhaseGains13 => "phase_gains13",
        }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim() {
            return Err(Error::config(format!(
                "{} expects {} parameters, got {}",
                self.label(),
                self.dim(),
                params.len()
            )));
        }
        if let Some(v) = params.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite controller parameter {v}")));
        }
        Ok(())
    }

    /// Gains for the given schedule phase.  Phases beyond the third reuse the
    /// last gain set.
    pub fn gains(&self, params: &[f64], phase: usize) -> StepGains {
        match self {
            ControllerFamily::Gains5 => StepGains {
                k: params[0],
                c: params[1],
                t_step: params[2],
                k_pt: params[3],
                k_dt: params[4],
            },
            ControllerFamily::PhaseGains13 => {
                let b = 3 * phase.min(2);
                StepGains {
                    k: params[b],
                    c: params[b + 1],
                    t_step: params[b + 2],
                    k_pt: params[9],
                    k_dt: params[10],
                }
            }
        }
    }

    pub fn swing_shape(&self, params: &[f64]) -> SwingShape {
        match self {
            ControllerFamily::Gains5 => SwingShape {
                apex: DEFAULT_APEX,
                retract: 0.0,
            },
            ControllerFamily::PhaseGains13 => SwingShape {
                apex: params[11],
                retract: params[12],
            },
        }
    }
}

/// Multiplicative model perturbation applied to the true plant, never to the
/// controller's beliefs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationFactors {
    pub mass_scale: f64,
    pub inertia_scale: f64,
    pub com_scale: f64,
}

impl PerturbationFactors {
    pub fn identity() -> Self {
        PerturbationFactors {
            mass_scale: 1.0,
            inertia_scale: 1.0,
            com_scale: 1.0,
        }
    }
}

impl Default for PerturbationFactors {
    fn default() -> Self {
        Self::identity()
    }
}

/// Piecewise-constant ground height.  `breaks` holds `(start_x, height)`
/// pairs sorted by `start_x`; the first entry starts at negative infinity so
/// every query is covered.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundProfile {
    breaks: Vec<(f64, f64)>,
}

impl GroundProfile {
    pub fn flat() -> Self {
        GroundProfile {
            breaks: vec![(f64::NEG_INFINITY, 0.0)],
        }
    }

    pub fn from_breaks(breaks: Vec<(f64, f64)>) -> Result<Self> {
        if breaks.is_empty() {
            return Err(Error::config("ground profile needs at least one segment"));
        }
        if breaks[0].0 != f64::NEG_INFINITY {
            return Err(Error::config(
                "ground profile must start at negative infinity",
            ));
        }
        if breaks.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config("ground breakpoints must be increasing"));
        }
        if breaks.iter().any(|&(_, h)| !h.is_finite()) {
            return Err(Error::config("ground heights must be finite"));
        }
        Ok(GroundProfile { breaks })
    }

    pub fn height(&self, x: f64) -> f64 {
        let idx = self.breaks.partition_point(|&(start, _)| start <= x);
        self.breaks[idx - 1].1
    }

    pub fn breaks(&self) -> &[(f64, f64)] {
        &self.breaks
    }

    pub fn is_flat(&self) -> bool {
        self.breaks.len() == 1 && self.breaks[0].1 == 0.0
    }
}
