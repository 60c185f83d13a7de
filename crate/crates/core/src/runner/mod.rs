//! Experiment orchestration behind the `rareflow` binary: configuration,
//! replication loop and CSV output.

mod config;
mod experiment;
mod output;

pub use config::{load_config, parse_config_str, ConfigError, ExperimentConfig, Overrides, DESK_SCALE};
pub use experiment::{run_experiment, ExperimentResult, MethodRun, ReplicationRecord, RunError};
pub use output::{
    comparison_table, emit_csv, format_number, replications_csv, summary_csv, REPLICATIONS_FILE, SUMMARY_FILE,
};
