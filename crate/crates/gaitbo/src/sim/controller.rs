use super::config::{StepGains, SwingShape};

/// Raibert foot placement: speed-error feedback, stance-offset correction,
/// and the half-step neutral point.  Returns the touchdown target relative to
/// the current CoM x.
///
/// `v` is the measured forward speed, `d` the measured horizontal distance
/// from the stance foot to the CoM.
pub fn plan_touchdown(gains: &StepGains, v: f64, v_tgt: f64, d: f64) -> f64 {
    gains.k * (v - v_tgt) + gains.c * d + 0.5 * v * gains.t_step
}

/// Stance PD targets: pitch and CoM height.
#[derive(Clone, Copy, Debug)]
pub struct StancePd {
    pub k_pt: f64,
    pub k_dt: f64,
    pub theta_des: f64,
    pub k_pz: f64,
    pub k_dz: f64,
    pub z_des: f64,
}

/// The two stance force laws: horizontal force from the pitch servo and
/// vertical force from the height servo.  Pure PD, no gravity feedforward;
/// the plant layer adds weight compensation separately.
pub fn stance_forces(pd: &StancePd, theta: f64, omega: f64, z: f64, vz: f64) -> (f64, f64) {
    let f_x = pd.k_pt * (pd.theta_des - theta) + pd.k_dt * (0.0 - omega);
    let f_z = pd.k_pz * (pd.z_des - z) + pd.k_dz * (0.0 - vz);
    (f_x, f_z)
}

/// Quintic polynomial coefficients, lowest order first.
pub type Quintic = [f64; 6];

pub fn eval_quintic(c: &Quintic, t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

pub fn eval_quintic_rate(c: &Quintic, t: f64) -> f64 {
    (1..6).rev().fold(0.0, |acc, i| acc * t + i as f64 * c[i])
}

/// Quintic with position, velocity, and acceleration pinned at both ends.
pub fn quintic_boundary(
    p0: f64,
    v0: f64,
    a0: f64,
    p1: f64,
    v1: f64,
    a1: f64,
    t_end: f64,
) -> Quintic {
    let t = t_end;
    let t2 = t * t;
    let t3 = t2 * t;
    let dp = p1 - p0;
    let c3 = (20.0 * dp - (8.0 * v1 + 12.0 * v0) * t - (3.0 * a0 - a1) * t2) / (2.0 * t3);
    let c4 = (-30.0 * dp + (14.0 * v1 + 16.0 * v0) * t + (3.0 * a0 - 2.0 * a1) * t2) / (2.0 * t3 * t);
    let c5 = (12.0 * dp - 6.0 * (v1 + v0) * t - (a0 - a1) * t2) / (2.0 * t3 * t2);
    [p0, v0, 0.5 * a0, c3, c4, c5]
}

/// Quintic with zero slope and curvature at the start, zero slope at the end,
/// and a prescribed mid-point value (the swing apex).
pub fn quintic_apex(p0: f64, p1: f64, mid: f64, t_end: f64) -> Quintic {
    let a = p1 - p0;
    let b = mid - p0;
    let u = 32.0 * b - 6.0 * a;
    let v = 17.0 * a - 64.0 * b;
    let w = 32.0 * b - 10.0 * a;
    let t3 = t_end * t_end * t_end;
    [p0, 0.0, 0.0, u / t3, v / (t3 * t_end), w / (t3 * t_end * t_end)]
}

/// Swing-foot path for one step, re-planned every control tick as the
/// touchdown target moves.
#[derive(Clone, Copy, Debug)]
pub struct SwingTrajectory {
    pub coeff_x: Quintic,
    pub coeff_z: Quintic,
    pub duration: f64,
}

impl SwingTrajectory {
    /// Quintic from `from` to `to` over `duration` seconds.  The foot leaves
    /// the ground at rest, arrives with the shape's retraction speed
    /// (backward) in x, and clears `shape.apex` above the higher endpoint at
    /// mid-swing.
    pub fn plan(from: [f64; 2], to: [f64; 2], shape: &SwingShape, duration: f64) -> Self {
        SwingTrajectory {
            coeff_x: quintic_boundary(from[0], 0.0, 0.0, to[0], -shape.retract, 0.0, duration),
            coeff_z: quintic_apex(from[1], to[1], from[1].max(to[1]) + shape.apex, duration),
            duration,
        }
    }

    pub fn at(&self, phase: f64) -> [f64; 2] {
        let t = phase.clamp(0.0, self.duration);
        [eval_quintic(&self.coeff_x, t), eval_quintic(&self.coeff_z, t)]
    }
}
