//! Scalar gait costs and the score regression target.
//!
//! All costs are minimized.  Falls are either penalized explicitly through a
//! `fall penalty minus distance` branch (`Atrias`, `NonSmooth`) or only
//! implicitly through short walking time and distance (`Smooth`).

use serde::{Deserialize, Serialize};

use crate::sim::TrajectorySummary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Atrias,
    Smooth,
    NonSmooth,
}

impl CostKind {
    pub fn label(&self) -> &'static str {
        match self {
            CostKind::Atrias => "atrias",
            CostKind::Smooth => "smooth",
            CostKind::NonSmooth => "non_smooth",
        }
    }

    /// Threshold under which a run counts as walking.
    pub fn walking_threshold(&self) -> f64 {
        match self {
            CostKind::Atrias => 50.0,
            CostKind::Smooth => 0.2,
            CostKind::NonSmooth => 100.0,
        }
    }

    /// Stricter threshold for robust gaits; only the tracking cost
    /// distinguishes it from [`walking_threshold`].
    pub fn stable_threshold(&self) -> f64 {
        match self {
            CostKind::Atrias => 20.0,
            other => other.walking_threshold(),
        }
    }
}

/// A cost function instance: the kind plus its targets.
///
/// `v_tgt` holds one target speed per schedule segment; scalar-target kinds
/// (`Smooth`, `NonSmooth`) read the first entry.  `weight` is the nominal
/// robot weight `m * g` [N] used by the transport term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub kind: CostKind,
    pub v_tgt: Vec<f64>,
    pub weight: f64,
}

impl CostSpec {
    pub fn atrias(v_tgt: Vec<f64>) -> Self {
        CostSpec {
            kind: CostKind::Atrias,
            v_tgt,
            weight: 0.0,
        }
    }

    pub fn smooth(s_tgt: f64) -> Self {
        CostSpec {
            kind: CostKind::Smooth,
            v_tgt: vec![s_tgt],
            weight: 0.0,
        }
    }

    pub fn non_smooth(v_tgt: f64, weight: f64) -> Self {
        CostSpec {
            kind: CostKind::NonSmooth,
            v_tgt: vec![v_tgt],
            weight,
        }
    }

    pub fn evaluate(&self, s: &TrajectorySummary) -> f64 {
        match self.kind {
            CostKind::Atrias => cost_atrias(s, &self.v_tgt),
            CostKind::Smooth => cost_smooth(s, self.v_tgt[0]),
            CostKind::NonSmooth => cost_non_smooth(s, self.v_tgt[0], self.weight),
        }
    }

    /// Cost recorded when an evaluation fails outright (diverged rollout):
    /// the fall branch at zero distance and time.
    pub fn failure_cost(&self) -> f64 {
        self.evaluate(&TrajectorySummary::failed())
    }
}

/// Fall branch `100 - x_fall`; walks pay quadratic speed tracking error,
/// per schedule segment when the target varies.
pub fn cost_atrias(s: &TrajectorySummary, v_tgt: &[f64]) -> f64 {
    if s.fell {
        return 100.0 - s.x_fall;
    }
    if v_tgt.len() == 1 {
        let e = v_tgt[0] - s.v_mean;
        return 10.0 * e * e;
    }
    10.0 * v_tgt
        .iter()
        .zip(&s.seg_speeds)
        .map(|(&t, &v)| (t - v) * (t - v))
        .sum::<f64>()
}

/// Smoothly shaped cost: longer walking time and distance always help, and
/// speed enters through a signed linear term.  No explicit fall branch.
pub fn cost_smooth(s: &TrajectorySummary, s_tgt: f64) -> f64 {
    let d = s.x_torso.max(0.0);
    1.0 / (1.0 + s.t_walk) + 0.3 / (1.0 + d) + 0.01 * (s.v_mean - s_tgt)
}

/// Fall branch `300 - x_fall`; walks pay linear speed error plus the
/// dimensionless transport cost `energy / (weight * distance)`.  A walk that
/// ends at or behind the start has no defined transport cost and is treated
/// as a fall at its final position.
pub fn cost_non_smooth(s: &TrajectorySummary, v_tgt: f64, weight: f64) -> f64 {
    if s.fell {
        return 300.0 - s.x_fall;
    }
    if s.x_com <= 0.0 {
        return 300.0 - s.x_com;
    }
    100.0 * (s.v_mean - v_tgt).abs() + s.energy / (weight * s.x_com)
}

/// Score regression target: softplus of how far below the mean walking cost
/// a rollout lands.  Falls and bad walks collapse toward zero, good walks
/// spread out above `ln 2`.
pub fn score_transform(cost: f64, c_walk: f64) -> f64 {
    softplus(c_walk - cost)
}

fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}
