use super::controller::{stance_forces, StancePd};

/// Torso rigid-body state.  `x, z` are the true CoM position; `theta` is the
/// counterclockwise pitch from upright.  `energy` accumulates the absolute
/// mechanical work of the applied stance force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub vx: f64,
    pub vz: f64,
    pub omega: f64,
    pub energy: f64,
}

impl BodyState {
    pub fn is_finite(&self) -> bool {
        [self.x, self.z, self.theta, self.vx, self.vz, self.omega, self.energy]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// True plant inertial parameters (after perturbation).
#[derive(Clone, Copy, Debug)]
pub struct Plant {
    pub mass: f64,
    pub inertia: f64,
    pub gravity: f64,
}

/// Closed-loop stance force law.
///
/// `feedforward_z` is the weight compensation the controller adds from its
/// nominal mass model.  `com_slip` is the controller's CoM offset belief
/// minus the true offset; height and its rate are measured at the believed
/// CoM, so a slip feeds a pitch-dependent bias into the vertical servo.
#[derive(Clone, Copy, Debug)]
pub struct StanceLaw {
    pub pd: StancePd,
    pub feedforward_z: f64,
    pub com_slip: f64,
}

impl StanceLaw {
    /// Total commanded contact force for the given body state.
    pub fn forces(&self, body: &BodyState) -> (f64, f64) {
        let (sin_t, cos_t) = body.theta.sin_cos();
        let z_meas = body.z + self.com_slip * sin_t;
        let vz_meas = body.vz + self.com_slip * cos_t * body.omega;
        let (f_x, f_z) = stance_forces(&self.pd, body.theta, body.omega, z_meas, vz_meas);
        (f_x, f_z + self.feedforward_z)
    }
}

#[derive(Clone, Copy)]
struct Deriv([f64; 7]);

fn advance(b: &BodyState, k: &Deriv, h: f64) -> BodyState {
    BodyState {
        x: b.x + h * k.0[0],
        z: b.z + h * k.0[1],
        theta: b.theta + h * k.0[2],
        vx: b.vx + h * k.0[3],
        vz: b.vz + h * k.0[4],
        omega: b.omega + h * k.0[5],
        energy: b.energy + h * k.0[6],
    }
}

/// One fixed-step 4th-order integration step of the CoM and pitch dynamics.
///
/// With `contact = Some((foot, law))` the commanded force acts at the foot
/// position, producing both linear acceleration and pitch torque about the
/// CoM; with `None` the body is ballistic.  The force law is re-evaluated at
/// every stage from the stage state.
pub fn step_dynamics(
    body: &mut BodyState,
    plant: &Plant,
    contact: Option<([f64; 2], &StanceLaw)>,
    dt: f64,
) {
    let deriv = |b: &BodyState| -> Deriv {
        match contact {
            None => Deriv([b.vx, b.vz, b.omega, 0.0, -plant.gravity, 0.0, 0.0]),
            Some((foot, law)) => {
                let (f_x, f_z) = law.forces(b);
                let r_x = foot[0] - b.x;
                let r_z = foot[1] - b.z;
                let torque = r_x * f_z - r_z * f_x;
                Deriv([
                    b.vx,
                    b.vz,
                    b.omega,
                    f_x / plant.mass,
                    f_z / plant.mass - plant.gravity,
                    torque / plant.inertia,
                    (f_x * b.vx).abs() + (f_z * b.vz).abs(),
                ])
            }
        }
    };

    let k1 = deriv(body);
    let k2 = deriv(&advance(body, &k1, 0.5 * dt));
    let k3 = deriv(&advance(body, &k2, 0.5 * dt));
    let k4 = deriv(&advance(body, &k3, dt));
    let combined: [f64; 7] =
        std::array::from_fn(|i| (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]) / 6.0);
    *body = advance(body, &Deriv(combined), dt);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ballistic flight has a closed form; the integrator must track it and
    /// conserve total mechanical energy to high relative accuracy over 1 s.
    #[test]
    fn flight_matches_closed_form_and_conserves_energy() {
        let plant = Plant {
            mass: 32.0,
            inertia: 2.2,
            gravity: 9.81,
        };
        let mut body = BodyState {
            x: 0.0,
            z: 1.0,
            theta: 0.1,
            vx: 1.3,
            vz: 2.0,
            omega: 0.4,
            energy: 0.0,
        };
        let e0 = 0.5 * plant.mass * (body.vx * body.vx + body.vz * body.vz)
            + 0.5 * plant.inertia * body.omega * body.omega
            + plant.mass * plant.gravity * body.z;

        let dt = 1e-3;
        let n = 1000;
        for _ in 0..n {
            step_dynamics(&mut body, &plant, None, dt);
        }
        let t = dt * n as f64;

        let z_exact = 1.0 + 2.0 * t - 0.5 * plant.gravity * t * t;
        let vz_exact = 2.0 - plant.gravity * t;
        assert!((body.x - 1.3 * t).abs() < 1e-9);
        assert!((body.z - z_exact).abs() < 1e-9);
        assert!((body.vz - vz_exact).abs() < 1e-9);
        assert!((body.theta - (0.1 + 0.4 * t)).abs() < 1e-9);
        assert_eq!(body.energy, 0.0);

        let e1 = 0.5 * plant.mass * (body.vx * body.vx + body.vz * body.vz)
            + 0.5 * plant.inertia * body.omega * body.omega
            + plant.mass * plant.gravity * body.z;
        assert!(
            ((e1 - e0) / e0).abs() <= 1e-6,
            "relative energy drift {}",
            ((e1 - e0) / e0).abs()
        );
    }

    /// A stance force applied at a foot directly below the CoM produces no
    /// torque from the vertical component, and the horizontal component
    /// torques with moment arm equal to the height.
    #[test]
    fn stance_torque_geometry() {
        let plant = Plant {
            mass: 10.0,
            inertia: 1.0,
            gravity: 0.0,
        };
        let law = StanceLaw {
            pd: StancePd {
                k_pt: 50.0,
                k_dt: 0.0,
                theta_des: 0.0,
                k_pz: 0.0,
                k_dz: 0.0,
                z_des: 0.0,
            },
            feedforward_z: 0.0,
            com_slip: 0.0,
        };
        let mut body = BodyState {
            x: 0.0,
            z: 0.8,
            theta: 0.1,
            vx: 0.0,
            vz: 0.0,
            omega: 0.0,
            energy: 0.0,
        };
        // f_x = 50 * (0 - 0.1) = -5 applied at the foot 0.8 below the CoM:
        // torque = -(-0.8) * f_x = 0.8 * (-5) = -4, restoring the lean.
        let dt = 1e-4;
        step_dynamics(&mut body, &plant, Some(([0.0, 0.0], &law)), dt);
        assert!(body.omega < 0.0, "pitch rate should restore, got {}", body.omega);
        let alpha = body.omega / dt;
        assert!((alpha - (-4.0)).abs() < 0.05, "alpha {alpha}");
    }

    /// Believed CoM slip biases the height measurement by slip * sin(theta).
    #[test]
    fn com_slip_biases_height_servo() {
        let pd = StancePd {
            k_pt: 0.0,
            k_dt: 0.0,
            theta_des: 0.0,
            k_pz: 1000.0,
            k_dz: 0.0,
            z_des: 0.8,
        };
        let body = BodyState {
            x: 0.0,
            z: 0.8,
            theta: 0.2,
            vx: 0.0,
            vz: 0.0,
            omega: 0.0,
            energy: 0.0,
        };
        let no_slip = StanceLaw {
            pd,
            feedforward_z: 0.0,
            com_slip: 0.0,
        };
        assert_eq!(no_slip.forces(&body).1, 0.0);
        let slipped = StanceLaw {
            pd,
            feedforward_z: 0.0,
            com_slip: 0.01,
        };
        let expect = -1000.0 * 0.01 * 0.2_f64.sin();
        assert!((slipped.forces(&body).1 - expect).abs() < 1e-9);
    }
}
