//! Experiment configuration file.
//!
//! A single TOML file drives every subcommand. Unknown keys are rejected
//! so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::costs::{CostKind, CostSpec};
use crate::error::{Error, Result};
use crate::nnet::TrainConfig;
use crate::sim::{Bounds, ControllerFamily, SimConfig};

/// Kernel named in a config file. Order in the list is the run order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "se")]
    Se,
    #[serde(rename = "asymNN")]
    AsymNn,
    #[serde(rename = "trajNN")]
    TrajNn,
}

impl KernelKind {
    pub fn label(&self) -> &'static str {
        match self {
            KernelKind::Se => "se",
            KernelKind::AsymNn => "asymNN",
            KernelKind::TrajNn => "trajNN",
        }
    }

    /// Kernels that read a trained feature net.
    pub fn needs_model(&self) -> bool {
        !matches!(self, KernelKind::Se)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub family: ControllerFamily,
    pub cost: CostKind,
    pub kernels: Vec<KernelKind>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    /// One perturbation seed per BO run, cycled by seed position; empty
    /// means the nominal plant.
    #[serde(default)]
    pub perturb_seeds: Vec<u64>,
    /// One rough-ground seed per BO run, cycled; empty means flat ground.
    #[serde(default)]
    pub ground_seeds: Vec<u64>,
    /// Terrain length carved by each ground seed [m].
    #[serde(default = "default_ground_extent")]
    pub ground_extent: f64,
    /// Speed target of the scalar-target costs; defaults to the final
    /// schedule segment's target.
    #[serde(default)]
    pub cost_speed: Option<f64>,
}

fn default_ground_extent() -> f64 {
    16.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub dataset: PathBuf,
    pub score_model: PathBuf,
    pub traj_model: PathBuf,
    pub results: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Sobol grid size.
    pub n: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection { n: 5000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoSection {
    pub n_uniform: usize,
    pub n_local: usize,
    pub local_sigma: f64,
}

impl Default for BoSection {
    fn default() -> Self {
        BoSection {
            n_uniform: 10_000,
            n_local: 8,
            local_sigma: 0.05,
        }
    }
}

/// Everything a full experiment needs, one section per concern.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub paths: PathsSection,
    pub bounds: BoundsSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub bo: BoSection,
}

/// 1-based line of the first line containing `needle`, for pointing a
/// schema error back at its source.
fn line_of(text: &str, needle: &str) -> usize {
    for (i, line) in text.lines().enumerate() {
        if line.contains(needle) {
            return i + 1;
        }
    }
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigFile {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate(text, origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    // The negated comparison rejects NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self, text: &str, origin: &Path) -> Result<()> {
        let fail = |message: String| {
            Err(Error::ConfigFile {
                path: origin.to_path_buf(),
                message,
            })
        };
        let e = &self.experiment;
        if self.bounds.low.is_empty() || self.bounds.high.is_empty() {
            return fail(format!("empty bounds (line {})", line_of(text, "[bounds]")));
        }
        let d = e.family.dim();
        if self.bounds.low.len() != d || self.bounds.high.len() != d {
            return fail(format!(
                "bounds must have {} entries for family {}, got {}/{} (line {})",
                d,
                e.family.label(),
                self.bounds.low.len(),
                self.bounds.high.len(),
                line_of(text, "[bounds]")
            ));
        }
        Bounds::new(self.bounds.low.clone(), self.bounds.high.clone())
            .map_err(|err| Error::ConfigFile {
                path: origin.to_path_buf(),
                message: format!("{err} (line {})", line_of(text, "[bounds]")),
            })?;
        if e.kernels.is_empty() {
            return fail(format!("no kernels listed (line {})", line_of(text, "kernels")));
        }
        if e.seeds.is_empty() {
            return fail(format!("seed list is empty (line {})", line_of(text, "seeds")));
        }
        if e.budget == 0 {
            return fail(format!("budget must be at least 1 (line {})", line_of(text, "budget")));
        }
        if self.data.n == 0 {
            return fail(format!("data.n must be at least 1 (line {})", line_of(text, "n")));
        }
        if !(e.ground_extent > 0.0) {
            return fail(format!(
                "ground_extent must be positive (line {})",
                line_of(text, "ground_extent")
            ));
        }
        self.sim.validate()?;
        self.train.validate()?;
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.bounds.low.clone(), self.bounds.high.clone())
            .expect("validated at load time")
    }

    /// Cost instance implied by the config: segment speeds for the
    /// multi-phase cost, the schedule's final target (or `cost_speed`)
    /// for the scalar-target kinds, nominal weight for the transport term.
    pub fn cost_spec(&self) -> CostSpec {
        let speeds = self.sim.target_speeds();
        let last = *speeds.last().expect("validated schedule is nonempty");
        let speed = self.experiment.cost_speed.unwrap_or(last);
        match self.experiment.cost {
            CostKind::Atrias => CostSpec::atrias(speeds),
            CostKind::Smooth => CostSpec::smooth(speed),
            CostKind::NonSmooth => {
                CostSpec::non_smooth(speed, self.sim.torso_mass * self.sim.gravity)
            }
        }
    }

    /// Digest over the entire parsed config; any field change shows up here.
    pub fn digest(&self) -> String {
        crate::data::digest_hex(self)
    }
}
