//! Monte Carlo experiment driver: config parsing, parallel trials, CSV
//! output and console summaries.

mod config;
mod output;
mod runner;

use std::path::PathBuf;

use thiserror::Error;

use crate::dp::DpError;
use crate::registry::UnknownStrategy;
use crate::strategies::StrategyError;

pub use config::{Environment, ExperimentConfig, GridSpec, PriorSpec, ThetaSpec, ValidatedConfig};
pub use output::{emit_csv, render_summary, summarize, write_csv, StrategySummary, CSV_HEADER};
pub use runner::{run_experiment, run_experiment_with_threads, ResultRow, ResultTable};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "COGMAC_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config error: {0}")]
    UnknownStrategy(UnknownStrategy),
    #[error("dp-optimal at horizon {horizon}: {source}")]
    Budget { horizon: usize, source: DpError },
    #[error("simulation failed: {0}")]
    Runtime(#[from] StrategyError),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 for config problems, 2 for runtime failures
    /// (including an exceeded DP budget).
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::UnknownStrategy(_)
            | HarnessError::Output { .. } => 1,
            HarnessError::Budget { .. } | HarnessError::Runtime(_) => 2,
        }
    }
}
