//! Experiment front end: a TOML config drives generate, train, bo, and
//! aggregate; the binary in `src/bin` is a thin argument parser over the
//! command functions here.

mod commands;
mod config;
mod results;

pub use commands::{
    cmd_aggregate, cmd_bo, cmd_generate, cmd_train, AggregateOutcome, BoOutcome, GenerateOutcome,
    TrainOutcome, TrainTarget, WORKERS_ENV,
};
pub use config::{ExperimentConfig, KernelKind};
pub use results::{
    aggregate, aggregate_to_csv, aggregate_to_text, read_results, results_from_csv, results_to_csv,
    AggregateRow, AggregateTable, ResultsFile, ResultsMeta,
};
