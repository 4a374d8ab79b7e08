//! Experiment runner for dynamic temporal reconciliation: loads a daily
//! series, builds base forecasts, trains the agent on past months and
//! streams a test month through it.

pub mod config;
pub mod error;
pub mod external;
pub mod pipeline;

pub use config::{RunConfig, Settings};
pub use error::{CliError, CliResult};
pub use pipeline::{
    reconcile_from_snapshot, run_experiment, run_grid_only, validate_data, RunSummary,
};
