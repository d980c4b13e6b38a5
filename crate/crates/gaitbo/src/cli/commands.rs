//! The four pipeline stages behind the CLI, as plain functions so tests
//! can drive them without spawning a process.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::costs::CostKind;
use crate::data::{generate_dataset, Dataset};
use crate::error::{Error, Result};
use crate::gp::{bo_run, BoResult, BoSettings, FeatureMap};
use crate::nnet::{read_model, train, write_model};
use crate::sim::{perturbation_factors, rollout, rough_ground, GroundProfile, PerturbationFactors};

use super::config::{ExperimentConfig, KernelKind};
use super::results::{
    aggregate, aggregate_to_csv, read_results, results_to_csv, AggregateTable, ResultsMeta,
};

/// Worker-count override, read from `GAITBO_WORKERS`.
pub const WORKERS_ENV: &str = "GAITBO_WORKERS";

fn with_worker_setting<T: Send>(setting: Option<&str>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match setting {
        None => Ok(f()),
        Some(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    Error::config(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`"))
                })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `f` inside a Rayon pool sized by `GAITBO_WORKERS`, or the global
/// pool when the variable is unset.
fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    with_worker_setting(std::env::var(WORKERS_ENV).ok().as_deref(), f)
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(content.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let hash = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in hash {
        use std::fmt::Write;
        write!(out, "{b:02x}").unwrap();
    }
    Ok(out)
}

/// What `generate` did, for logging and tests.
#[derive(Clone, Debug)]
pub struct GenerateOutcome {
    pub path: PathBuf,
    pub rows: usize,
    pub walking_fraction: f64,
    pub c_walk: Option<f64>,
    pub file_digest: String,
}

/// Evaluates the Sobol grid on the nominal plant over flat ground and
/// writes the dataset file.
pub fn cmd_generate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<GenerateOutcome> {
    let bounds = cfg.bounds();
    let cost = cfg.cost_spec();
    let grid_n = cfg.data.n;
    let family = cfg.experiment.family;
    let ds = with_workers(|| {
        generate_dataset(
            &cfg.sim,
            family,
            &bounds,
            &cost,
            grid_n,
            &PerturbationFactors::identity(),
            &GroundProfile::flat(),
        )
    })??;
    let path = out.unwrap_or(&cfg.paths.dataset).to_path_buf();
    write_atomic(&path, &ds.to_csv())?;
    Ok(GenerateOutcome {
        file_digest: file_digest(&path)?,
        rows: ds.len(),
        walking_fraction: ds.walking_fraction(),
        c_walk: ds.c_walk,
        path,
    })
}

/// Which regression target a `train` invocation fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainTarget {
    Score,
    Traj,
}

impl TrainTarget {
    pub fn label(&self) -> &'static str {
        match self {
            TrainTarget::Score => "score",
            TrainTarget::Traj => "traj",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub path: PathBuf,
    pub target: TrainTarget,
    pub train_l1: f64,
    pub val_l1: f64,
    pub file_digest: String,
}

/// Fits the feature net for `target` on the dataset and writes the model.
pub fn cmd_train(
    cfg: &ExperimentConfig,
    target: TrainTarget,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    let ds = Dataset::read(&cfg.paths.dataset)?;
    let xs: Vec<Vec<f64>> = ds.records.iter().map(|r| r.params.clone()).collect();
    let ys: Vec<Vec<f64>> = match target {
        TrainTarget::Score => ds
            .records
            .iter()
            .map(|r| {
                r.score.map(|s| vec![s]).ok_or_else(|| {
                    Error::Dataset(
                        "dataset has no score column (every grid point fell), cannot train the score net"
                            .into(),
                    )
                })
            })
            .collect::<Result<_>>()?,
        TrainTarget::Traj => ds.records.iter().map(|r| r.vector8().to_vec()).collect(),
    };
    let (mlp, report) = train(&xs, &ys, &cfg.train)?;
    let default_path = match target {
        TrainTarget::Score => &cfg.paths.score_model,
        TrainTarget::Traj => &cfg.paths.traj_model,
    };
    let path = out.unwrap_or(default_path).to_path_buf();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    write_model(&path, &mlp)?;
    Ok(TrainOutcome {
        file_digest: file_digest(&path)?,
        path,
        target,
        train_l1: report.final_train_l1,
        val_l1: report.final_val_l1,
    })
}

fn feature_map(cfg: &ExperimentConfig, kernel: KernelKind) -> Result<FeatureMap> {
    match kernel {
        KernelKind::Se => Ok(FeatureMap::Identity),
        KernelKind::AsymNn => FeatureMap::score_net(read_model(&cfg.paths.score_model)?),
        KernelKind::TrajNn => FeatureMap::traj_net(read_model(&cfg.paths.traj_model)?),
    }
}

#[derive(Clone, Debug)]
pub struct BoOutcome {
    pub path: PathBuf,
    pub runs: usize,
    pub evaluations: usize,
    /// Cells that died with a hard error, as (kernel, seed, message).
    pub failures: Vec<(String, u64, String)>,
    pub file_digest: String,
}

/// Runs the kernel x seed matrix and writes the results CSV. A failed
/// cell is reported and skipped; the rest of the matrix still runs.
pub fn cmd_bo(cfg: &ExperimentConfig, out: Option<&Path>, quiet: bool) -> Result<BoOutcome> {
    let e = &cfg.experiment;
    for k in &e.kernels {
        if k.needs_model() {
            let path = match k {
                KernelKind::AsymNn => &cfg.paths.score_model,
                KernelKind::TrajNn => &cfg.paths.traj_model,
                KernelKind::Se => unreachable!(),
            };
            if !path.exists() {
                return Err(Error::config(format!(
                    "kernel {} needs model file {} (run `train` first)",
                    k.label(),
                    path.display()
                )));
            }
        }
    }

    let bounds = cfg.bounds();
    let cost = cfg.cost_spec();
    let budget = e.budget;
    let mut cells = Vec::new();
    for kernel in &e.kernels {
        let map = feature_map(cfg, *kernel)?;
        for (i, &seed) in e.seeds.iter().enumerate() {
            let perturb = match e.perturb_seeds.is_empty() {
                true => PerturbationFactors::identity(),
                false => perturbation_factors(e.perturb_seeds[i % e.perturb_seeds.len()]),
            };
            let ground = match e.ground_seeds.is_empty() {
                true => GroundProfile::flat(),
                false => rough_ground(e.ground_seeds[i % e.ground_seeds.len()], e.ground_extent),
            };
            cells.push((map.clone(), seed, perturb, ground));
        }
    }

    let outcomes: Vec<(String, u64, crate::error::Result<BoResult>)> = with_workers(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|(map, seed, perturb, ground)| {
                let label = map.label().to_string();
                let mut best = f64::INFINITY;
                let res = bo_run(
                    |p| {
                        let summary =
                            rollout(&cfg.sim, e.family, p, perturb, ground)?;
                        let c = cost.evaluate(&summary);
                        best = best.min(c);
                        if !quiet {
                            eprintln!(
                                "bo {label} seed={seed} trial_cost={c:.4} best={best:.4}"
                            );
                        }
                        Ok(c)
                    },
                    cost.failure_cost(),
                    map,
                    &bounds,
                    &BoSettings {
                        mean: crate::gp::MeanPolicy::Median,
                        n_uniform: cfg.bo.n_uniform,
                        n_local: cfg.bo.n_local,
                        local_sigma: cfg.bo.local_sigma,
                        ..BoSettings::new(budget, *seed)
                    },
                );
                (label, *seed, res)
            })
            .collect()
    })?;

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (kernel, seed, res) in outcomes {
        match res {
            Ok(r) => runs.push(r),
            Err(err) => failures.push((kernel, seed, err.to_string())),
        }
    }
    if runs.is_empty() {
        return Err(Error::Numerical(format!(
            "every BO cell failed; first: {}/{}: {}",
            failures[0].0, failures[0].1, failures[0].2
        )));
    }

    let meta = ResultsMeta {
        config_digest: cfg.digest(),
        family: e.family.label().to_string(),
        cost: cfg.experiment.cost,
        dim: bounds.dim(),
        budget,
    };
    let path = out.unwrap_or(&cfg.paths.results).to_path_buf();
    write_atomic(&path, &results_to_csv(&meta, &runs))?;
    Ok(BoOutcome {
        file_digest: file_digest(&path)?,
        evaluations: runs.iter().map(|r| r.trials.len()).sum(),
        runs: runs.len(),
        failures,
        path,
    })
}

#[derive(Clone, Debug)]
pub struct AggregateOutcome {
    pub path: PathBuf,
    pub table: AggregateTable,
    pub cost: CostKind,
}

/// Collapses a results file into per-(kernel, trial) convergence rows.
pub fn cmd_aggregate(results_path: &Path, out: Option<&Path>) -> Result<AggregateOutcome> {
    let results = read_results(results_path)?;
    let table = aggregate(&results)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let mut name = results_path.file_stem().unwrap_or_default().to_os_string();
            name.push("_summary.csv");
            results_path.with_file_name(name)
        }
    };
    write_atomic(&path, &aggregate_to_csv(&table))?;
    Ok(AggregateOutcome {
        path,
        table,
        cost: results.meta.cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn config_in(dir: &Path) -> ExperimentConfig {
        let text = format!(
            r#"
[experiment]
family = "gains5"
cost = "atrias"
kernels = ["se"]
seeds = [0, 1]
budget = 3

[paths]
dataset = "{0}/data.csv"
score_model = "{0}/score.txt"
traj_model = "{0}/traj.txt"
results = "{0}/results.csv"

[bounds]
low = [-2.0, -2.0, 0.02, -400.0, -40.0]
high = [2.0, 2.0, 1.2, 1200.0, 160.0]

[data]
n = 40

[train]
epochs = 5

[bo]
n_uniform = 50
"#,
            dir.display()
        );
        ExperimentConfig::from_toml(&text, Path::new("test.toml")).unwrap()
    }

    #[test]
    fn pipeline_runs_end_to_end_in_memory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_in(dir.path());

        let gen = cmd_generate(&cfg, None).unwrap();
        assert_eq!(gen.rows, 40);
        assert!(gen.path.exists());

        let tr = cmd_train(&cfg, TrainTarget::Traj, None).unwrap();
        assert!(tr.val_l1.is_finite());
        let model = read_model(&tr.path).unwrap();
        assert_eq!(model.n_outputs(), 8);

        let bo = cmd_bo(&cfg, None, true).unwrap();
        assert_eq!(bo.runs, 2);
        assert_eq!(bo.evaluations, 6);
        assert!(bo.failures.is_empty());

        let agg = cmd_aggregate(&bo.path, None).unwrap();
        assert_eq!(agg.table.rows.len(), 3);
        assert!(agg.path.exists());
    }

    #[test]
    fn generate_and_bo_are_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_in(dir.path());
        let a = cmd_generate(&cfg, None).unwrap();
        let b = cmd_generate(&cfg, None).unwrap();
        assert_eq!(a.file_digest, b.file_digest);

        let x = cmd_bo(&cfg, None, true).unwrap();
        let y = cmd_bo(&cfg, None, true).unwrap();
        assert_eq!(x.file_digest, y.file_digest);
    }

    #[test]
    fn missing_model_is_a_config_error_before_any_rollout() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config_in(dir.path());
        cfg.experiment.kernels = vec![KernelKind::AsymNn];
        let err = cmd_bo(&cfg, None, true).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("score.txt"), "{err}");
    }

    #[test]
    fn train_score_without_walkers_reports_the_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config_in(dir.path());
        // a box of pure backward-foot placements, guaranteed to fall
        cfg.bounds.low = vec![-2.0, -2.0, 0.5, -400.0, -40.0];
        cfg.bounds.high = vec![-1.5, -1.5, 0.6, -300.0, -30.0];
        let gen = cmd_generate(&cfg, None).unwrap();
        assert_eq!(gen.c_walk, None);
        let err = cmd_train(&cfg, TrainTarget::Score, None).unwrap_err();
        assert!(err.to_string().contains("score column"), "{err}");
        // the trajectory target still trains on the same dataset
        cmd_train(&cfg, TrainTarget::Traj, None).unwrap();
    }

    #[test]
    fn bo_seed_positions_cycle_the_perturbation_lists() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config_in(dir.path());
        cfg.experiment.seeds = vec![5, 6, 7];
        cfg.experiment.perturb_seeds = vec![11, 12];
        cfg.experiment.ground_seeds = vec![21];
        cfg.experiment.budget = 2;
        cfg.bo.n_uniform = 30;
        let bo = cmd_bo(&cfg, None, true).unwrap();
        assert_eq!(bo.runs, 3);
        // seeds 5 and 7 share perturb seed 11; different run seeds still
        // give different traces, but the matrix must complete either way
        assert_eq!(bo.evaluations, 6);
    }

    #[test]
    fn worker_setting_rejects_garbage() {
        for bad in ["zero", "0", "-1", ""] {
            let err = with_worker_setting(Some(bad), || 1).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(WORKERS_ENV));
        }
        assert_eq!(with_worker_setting(Some("2"), || 21 * 2).unwrap(), 42);
        assert_eq!(with_worker_setting(None, || 7).unwrap(), 7);
    }
}
