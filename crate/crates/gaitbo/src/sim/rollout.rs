use crate::error::{Error, Result};

use super::config::{ControllerFamily, GroundProfile, PerturbationFactors, SimConfig};
use super::controller::{plan_touchdown, StancePd, SwingTrajectory};
use super::dynamics::{step_dynamics, BodyState, Plant, StanceLaw};

/// Swing phase fraction during which ground strikes are ignored, so liftoff
/// from the old foothold never registers as a touchdown.
const SCUFF_GRACE: f64 = 0.1;

/// Penetration below local ground that counts as a strike [m].
const SCUFF_DEPTH: f64 = 1e-9;

/// Full walker state at a control tick.
#[derive(Clone, Copy, Debug)]
pub struct WalkerState {
    pub body: BodyState,
    pub stance_foot: [f64; 2],
    /// Seconds since the last support exchange.
    pub phase: f64,
    /// Foothold the swing foot lifted off from.
    pub swing_from: [f64; 2],
    pub swing: SwingTrajectory,
    /// Measured forward speed at the believed CoM [m/s].
    pub v_meas: f64,
    /// Measured stance-foot-to-CoM distance [m].
    pub d_meas: f64,
    /// Planned touchdown relative to the believed CoM x [m].
    pub x_p: f64,
    pub step_count: u32,
    /// Active speed-schedule segment.
    pub segment: usize,
}

/// What a rollout reduces to.  Positions are taken at the end of walking
/// (fall instant or horizon).  `x_fall` is the CoM x at the fall and zero for
/// runs that never fell.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub t_walk: f64,
    pub energy: f64,
    pub x_torso: f64,
    pub z_torso: f64,
    pub theta_torso: f64,
    pub x_com: f64,
    pub z_com: f64,
    pub v_mean: f64,
    pub fell: bool,
    pub x_fall: f64,
    /// Mean forward speed per visited schedule segment [m/s].
    pub seg_speeds: Vec<f64>,
}

impl TrajectorySummary {
    /// The eight regression targets, in dataset column order.
    pub fn vector8(&self) -> [f64; 8] {
        [
            self.t_walk,
            self.energy,
            self.x_torso,
            self.z_torso,
            self.theta_torso,
            self.x_com,
            self.z_com,
            self.v_mean,
        ]
    }

    /// Worst-case stand-in used when an evaluation fails outright: fell on
    /// the spot at time zero.
    pub fn failed() -> Self {
        TrajectorySummary {
            t_walk: 0.0,
            energy: 0.0,
            x_torso: 0.0,
            z_torso: 0.0,
            theta_torso: 0.0,
            x_com: 0.0,
            z_com: 0.0,
            v_mean: 0.0,
            fell: true,
            x_fall: 0.0,
            seg_speeds: Vec::new(),
        }
    }
}

/// Simulate one controller on one plant and ground.
pub fn rollout(
    cfg: &SimConfig,
    family: ControllerFamily,
    params: &[f64],
    perturb: &PerturbationFactors,
    ground: &GroundProfile,
) -> Result<TrajectorySummary> {
    rollout_impl(cfg, family, params, perturb, ground, |_, _| {})
}

/// As [`rollout`], additionally recording the walker state after every tick.
pub fn rollout_traced(
    cfg: &SimConfig,
    family: ControllerFamily,
    params: &[f64],
    perturb: &PerturbationFactors,
    ground: &GroundProfile,
) -> Result<(TrajectorySummary, Vec<(f64, WalkerState)>)> {
    let mut trace = Vec::new();
    let summary = rollout_impl(cfg, family, params, perturb, ground, |t, s| {
        trace.push((t, *s));
    })?;
    Ok((summary, trace))
}

fn rollout_impl(
    cfg: &SimConfig,
    family: ControllerFamily,
    params: &[f64],
    perturb: &PerturbationFactors,
    ground: &GroundProfile,
    mut observe: impl FnMut(f64, &WalkerState),
) -> Result<TrajectorySummary> {
    cfg.validate()?;
    family.check_params(params)?;

    let dt = cfg.timestep;
    let n_ticks = (cfg.horizon / dt).round() as usize;
    let plant = Plant {
        mass: cfg.torso_mass * perturb.mass_scale,
        inertia: cfg.torso_inertia * perturb.inertia_scale,
        gravity: cfg.gravity,
    };
    let com_true = cfg.com_offset * perturb.com_scale;
    let com_slip = cfg.com_offset - com_true;
    let shape = family.swing_shape(params);

    for phase_idx in 0..family.dim().min(3) {
        let t_step = family.gains(params, phase_idx).t_step;
        if !(t_step.is_finite() && t_step >= 4.0 * dt) {
            return Err(Error::config(format!(
                "step duration {t_step} shorter than four timesteps"
            )));
        }
    }

    let foot0 = [0.0, ground.height(0.0)];
    let mut state = WalkerState {
        body: BodyState {
            x: 0.0,
            z: cfg.z_des,
            theta: cfg.theta_des,
            vx: 0.9 * cfg.schedule[0].v_tgt,
            vz: 0.0,
            omega: 0.0,
            energy: 0.0,
        },
        stance_foot: foot0,
        phase: 0.0,
        swing_from: foot0,
        swing: SwingTrajectory::plan(foot0, foot0, &shape, family.gains(params, 0).t_step),
        v_meas: 0.0,
        d_meas: 0.0,
        x_p: 0.0,
        step_count: 0,
        segment: 0,
    };
    let mut steps_in_segment = 0u32;
    let mut seg_time = vec![0.0f64; cfg.schedule.len()];
    let mut seg_disp = vec![0.0f64; cfg.schedule.len()];
    let mut fell = false;
    let mut t_walk = n_ticks as f64 * dt;
    let mut x_fall = 0.0;

    for tick in 0..n_ticks {
        let gains = family.gains(params, state.segment);
        let v_tgt = cfg.schedule[state.segment].v_tgt;

        // controller measurements at the believed CoM
        let (sin_t, cos_t) = state.body.theta.sin_cos();
        let bx = state.body.x + com_slip * cos_t;
        let bvx = state.body.vx - com_slip * sin_t * state.body.omega;
        state.v_meas = bvx;
        state.d_meas = bx - state.stance_foot[0];
        state.x_p = plan_touchdown(&gains, state.v_meas, v_tgt, state.d_meas);
        let target_x = bx + state.x_p;
        state.swing = SwingTrajectory::plan(
            state.swing_from,
            [target_x, state.stance_foot[1]],
            &shape,
            gains.t_step,
        );

        let law = StanceLaw {
            pd: StancePd {
                k_pt: gains.k_pt,
                k_dt: gains.k_dt,
                theta_des: cfg.theta_des,
                k_pz: cfg.k_pz,
                k_dz: cfg.k_dz,
                z_des: cfg.z_des,
            },
            feedforward_z: cfg.torso_mass * cfg.gravity,
            com_slip,
        };

        let x_before = state.body.x;
        step_dynamics(&mut state.body, &plant, Some((state.stance_foot, &law)), dt);
        let t_now = (tick + 1) as f64 * dt;
        state.phase += dt;
        seg_time[state.segment] += dt;
        seg_disp[state.segment] += state.body.x - x_before;

        if !state.body.is_finite() {
            return Err(Error::Numerical(format!(
                "walker state diverged at t = {t_now:.3}"
            )));
        }

        if state.body.z < cfg.z_min || state.body.theta.abs() > cfg.theta_max {
            fell = true;
            t_walk = t_now;
            x_fall = state.body.x;
            observe(t_now, &state);
            break;
        }

        // support exchange: early on a swing-foot ground strike, otherwise at
        // the step-duration boundary
        let mut planted = None;
        if state.phase > SCUFF_GRACE * gains.t_step {
            let p = state.swing.at(state.phase);
            let h = ground.height(p[0]);
            if p[1] < h - SCUFF_DEPTH {
                planted = Some([p[0], h]);
            }
        }
        if planted.is_none() && state.phase >= gains.t_step - 1e-9 {
            planted = Some([target_x, ground.height(target_x)]);
        }
        if let Some(foot) = planted {
            state.swing_from = state.stance_foot;
            state.stance_foot = foot;
            state.phase = 0.0;
            state.step_count += 1;
            if state.segment < cfg.schedule.len() - 1 {
                steps_in_segment += 1;
                if steps_in_segment >= cfg.schedule[state.segment].steps {
                    state.segment += 1;
                    steps_in_segment = 0;
                }
            }
        }

        observe(t_now, &state);
    }

    let c = com_true;
    let (sin_t, cos_t) = state.body.theta.sin_cos();
    let seg_speeds = seg_time
        .iter()
        .zip(&seg_disp)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &d)| d / t)
        .collect();
    Ok(TrajectorySummary {
        t_walk,
        energy: state.body.energy,
        x_torso: state.body.x - c * cos_t,
        z_torso: state.body.z - c * sin_t,
        theta_torso: state.body.theta,
        x_com: state.body.x,
        z_com: state.body.z,
        v_mean: state.body.x / t_walk,
        fell,
        x_fall,
        seg_speeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::{SpeedSegment, StepGains};

    fn flat() -> GroundProfile {
        GroundProfile::flat()
    }

    fn nominal() -> PerturbationFactors {
        PerturbationFactors::identity()
    }

    /// Reasonable hand gains: close enough to walk a few steps for the
    /// structural assertions below even if not tuned for long-term stability.
    const GAINS: [f64; 5] = [0.25, 0.05, 0.34, 180.0, 26.0];

    #[test]
    fn exchange_happens_at_phase_boundary() {
        let cfg = SimConfig::default();
        let (_, trace) =
            rollout_traced(&cfg, ControllerFamily::Gains5, &GAINS, &nominal(), &flat()).unwrap();
        let t_step = GAINS[2];
        let boundary_tick = (t_step / cfg.timestep).round() as usize;
        // step_count flips 0 -> 1 exactly at the first boundary tick
        assert_eq!(trace[boundary_tick - 2].1.step_count, 0);
        assert_eq!(trace[boundary_tick - 1].1.step_count, 1);
        assert_eq!(trace[boundary_tick - 1].1.phase, 0.0);
    }

    #[test]
    fn swing_foot_lands_at_planned_target_on_flat_ground() {
        let cfg = SimConfig::default();
        let (_, trace) =
            rollout_traced(&cfg, ControllerFamily::Gains5, &GAINS, &nominal(), &flat()).unwrap();
        let at = trace
            .iter()
            .position(|(_, s)| s.step_count == 1)
            .expect("at least one exchange");
        // the exchange tick still carries the measurements and plan made at
        // its start, relative to the foot that was stance back then
        let planted = &trace[at].1;
        let old_foot_x = trace[at - 1].1.stance_foot[0];
        let believed_x = old_foot_x + planted.d_meas;
        assert!(
            (planted.stance_foot[0] - (believed_x + planted.x_p)).abs() < 1e-12,
            "foot at {} vs planned {}",
            planted.stance_foot[0],
            believed_x + planted.x_p
        );
        assert_eq!(planted.stance_foot[1], 0.0);
    }

    #[test]
    fn hopeless_gains_fall_and_record_position() {
        let cfg = SimConfig::default();
        // no pitch servo at all: the torso topples within the horizon
        let params = [0.0, 0.0, 0.3, 0.0, 0.0];
        let s = rollout(&cfg, ControllerFamily::Gains5, &params, &nominal(), &flat()).unwrap();
        assert!(s.fell);
        assert!(s.t_walk < cfg.horizon);
        assert_eq!(s.x_fall, s.x_com);
    }

    #[test]
    fn summary_reports_torso_and_com_kinematics() {
        let cfg = SimConfig::default();
        let s = rollout(&cfg, ControllerFamily::Gains5, &GAINS, &nominal(), &flat()).unwrap();
        let c = cfg.com_offset;
        let (sin_t, cos_t) = s.theta_torso.sin_cos();
        assert!((s.x_com - (s.x_torso + c * cos_t)).abs() < 1e-12);
        assert!((s.z_com - (s.z_torso + c * sin_t)).abs() < 1e-12);
    }

    #[test]
    fn rollouts_are_bit_deterministic() {
        let cfg = SimConfig::default();
        let perturb = crate::sim::perturb::perturbation_factors(9);
        let ground = crate::sim::perturb::rough_ground(3, 20.0);
        let a = rollout(&cfg, ControllerFamily::Gains5, &GAINS, &perturb, &ground).unwrap();
        let b = rollout(&cfg, ControllerFamily::Gains5, &GAINS, &perturb, &ground).unwrap();
        assert_eq!(a.t_walk.to_bits(), b.t_walk.to_bits());
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.x_com.to_bits(), b.x_com.to_bits());
        assert_eq!(a.z_com.to_bits(), b.z_com.to_bits());
        assert_eq!(a.theta_torso.to_bits(), b.theta_torso.to_bits());
        assert_eq!(a.v_mean.to_bits(), b.v_mean.to_bits());
        assert_eq!(a.fell, b.fell);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.seg_speeds), bits(&b.seg_speeds));
    }

    #[test]
    fn segment_schedule_advances_by_step_count() {
        let cfg = SimConfig {
            schedule: vec![
                SpeedSegment {
                    steps: 2,
                    v_tgt: 0.8,
                },
                SpeedSegment {
                    steps: 2,
                    v_tgt: 1.0,
                },
                SpeedSegment {
                    steps: u32::MAX,
                    v_tgt: 0.6,
                },
            ],
            ..SimConfig::default()
        };
        let (_, trace) =
            rollout_traced(&cfg, ControllerFamily::Gains5, &GAINS, &nominal(), &flat()).unwrap();
        for (_, s) in &trace {
            let expect = match s.step_count {
                0..=1 => 0,
                2..=3 => 1,
                _ => 2,
            };
            assert_eq!(s.segment, expect, "at step_count {}", s.step_count);
        }
    }

    #[test]
    fn too_short_step_duration_is_rejected() {
        let cfg = SimConfig::default();
        let params = [0.2, 0.0, 0.002, 100.0, 10.0];
        assert!(rollout(&cfg, ControllerFamily::Gains5, &params, &nominal(), &flat()).is_err());
    }

    #[test]
    fn negative_apex_scuffs_early() {
        let cfg = SimConfig::default();
        // phase gains with a below-ground apex: the swing foot strikes the
        // ground mid-swing, well before the step boundary
        let mut p = vec![0.25, 0.05, 0.4, 0.25, 0.05, 0.4, 0.25, 0.05, 0.4, 180.0, 26.0, -0.05, 0.0];
        let (_, trace) = rollout_traced(
            &cfg,
            ControllerFamily::PhaseGains13,
            &p,
            &nominal(),
            &flat(),
        )
        .unwrap();
        let first_exchange = trace
            .iter()
            .position(|(_, s)| s.step_count == 1)
            .expect("exchange");
        let t = trace[first_exchange].0;
        assert!(t < 0.4 - 1e-6, "scuff should land early, got {t}");
        p[11] = 0.07;
        let (_, trace_ok) = rollout_traced(
            &cfg,
            ControllerFamily::PhaseGains13,
            &p,
            &nominal(),
            &flat(),
        )
        .unwrap();
        let ok_exchange = trace_ok
            .iter()
            .position(|(_, s)| s.step_count == 1)
            .expect("exchange");
        let t_ok = trace_ok[ok_exchange].0;
        assert!((t_ok - 0.4).abs() < 1.5e-3, "clean swing lands on the boundary, got {t_ok}");
    }

    #[test]
    fn gains_accessor_used_by_rollout_matches_direct() {
        let g = ControllerFamily::Gains5.gains(&GAINS, 0);
        assert_eq!(
            g,
            StepGains {
                k: 0.25,
                c: 0.05,
                t_step: 0.34,
                k_pt: 180.0,
                k_dt: 26.0
            }
        );
    }
}
