//! Gait-optimization pipeline driver.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gaitbo::cli::{
    aggregate_to_text, cmd_aggregate, cmd_bo, cmd_generate, cmd_train, ExperimentConfig,
    KernelKind, TrainTarget,
};
use gaitbo::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gaitbo",
    about = "Planar-walker gait optimization: dataset generation, feature-net training, \
             kernel-comparison BO runs, and convergence aggregation.",
    after_help = "Worker count for parallel phases comes from the GAITBO_WORKERS environment \
                  variable (default: one worker per core)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Score,
    Traj,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Se,
    #[value(name = "asymNN", alias = "asymnn")]
    AsymNn,
    #[value(name = "trajNN", alias = "trajnn")]
    TrajNn,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Se => KernelKind::Se,
            KernelArg::AsymNn => KernelKind::AsymNn,
            KernelArg::TrajNn => KernelKind::TrajNn,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Sobol grid and write the dataset CSV.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output path, overriding paths.dataset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a feature net on the dataset and write the model file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Which regression target to fit.
        #[arg(long, value_enum)]
        target: TargetArg,
        /// Training seed, overriding train.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path, overriding the target's model path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the kernel x seed BO matrix and write the results CSV.
    Bo {
        #[arg(long)]
        config: PathBuf,
        /// Run only this kernel instead of the config's list.
        #[arg(long, value_enum)]
        kernel: Option<KernelArg>,
        /// Run only this seed instead of the config's list.
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per run, overriding experiment.budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Output path, overriding paths.results.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress per-trial progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Summarize a results CSV into per-(kernel, trial) convergence rows.
    Aggregate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Results file; defaults to the config's paths.results.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Output path for the summary CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let gen = cmd_generate(&cfg, out.as_deref())?;
            println!(
                "wrote {} ({} rows, walking fraction {:.4})",
                gen.path.display(),
                gen.rows,
                gen.walking_fraction
            );
            match gen.c_walk {
                Some(c) => println!("c_walk = {c:.6}"),
                None => println!("c_walk undefined: every grid point fell"),
            }
            println!("digest {}", gen.file_digest);
        }
        Command::Train {
            config,
            target,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let target = match target {
                TargetArg::Score => TrainTarget::Score,
                TargetArg::Traj => TrainTarget::Traj,
            };
            let tr = cmd_train(&cfg, target, out.as_deref())?;
            println!(
                "wrote {} ({} target, train L1 {:.6}, val L1 {:.6})",
                tr.path.display(),
                tr.target.label(),
                tr.train_l1,
                tr.val_l1
            );
            println!("digest {}", tr.file_digest);
        }
        Command::Bo {
            config,
            kernel,
            seed,
            budget,
            out,
            quiet,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(k) = kernel {
                cfg.experiment.kernels = vec![k.into()];
            }
            if let Some(s) = seed {
                cfg.experiment.seeds = vec![s];
            }
            if let Some(b) = budget {
                if b == 0 {
                    return Err(Error::config("budget must be at least 1"));
                }
                cfg.experiment.budget = b;
            }
            let bo = cmd_bo(&cfg, out.as_deref(), quiet)?;
            for (kernel, seed, msg) in &bo.failures {
                eprintln!("cell {kernel}/{seed} failed: {msg}");
            }
            println!(
                "wrote {} ({} runs, {} evaluations, {} failed cells)",
                bo.path.display(),
                bo.runs,
                bo.evaluations,
                bo.failures.len()
            );
            println!("digest {}", bo.file_digest);
        }
        Command::Aggregate {
            config,
            results,
            out,
        } => {
            let results_path = match (&results, &config) {
                (Some(r), _) => r.clone(),
                (None, Some(c)) => ExperimentConfig::load(c)?.paths.results,
                (None, None) => {
                    return Err(Error::config("aggregate needs --results or --config"))
                }
            };
            let agg = cmd_aggregate(&results_path, out.as_deref())?;
            print!("{}", aggregate_to_text(&agg.table));
            println!("\nwrote {}", agg.path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
