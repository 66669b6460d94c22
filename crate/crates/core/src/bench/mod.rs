//! Experiment harness behind the `sampled-nmpc` binary: JSON configs,
//! closed-loop runs with CSV/JSON logs, sweeps and log validation.

mod config;
mod run;
mod sweep;
mod validate;

pub use config::{ExperimentConfig, Overrides, PlantConfig, SCHEMA_VERSION};
pub use run::{
    run_experiment, run_log, steps_csv_string, summarize, write_error, write_steps_csv, ComplexitySummary,
    ErrorReport, OracleInfo, RunArtifacts, Summary, TerminationInfo, Timing, Totals, CONFIG_JSON, ERROR_JSON,
    STEPS_CSV, SUMMARY_JSON,
};
pub use sweep::{sweep, SweepConfig, SweepOutcome, SweepRow, SWEEP_CSV};
pub use validate::{validate_log, LogViolation, ValidationReport};

use crate::error::NmpcError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("solver failed at k={k}: {error}")]
    Solver {
        k: usize,
        error: NmpcError,
        artifacts: Option<Box<RunArtifacts>>,
    },
}

impl BenchError {
    pub(crate) fn io(path: impl Into<String>, e: impl std::fmt::Display) -> Self {
        BenchError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    /// Process exit code: 2 config, 3 infeasibility or failed initial search, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Io { .. } => 4,
            BenchError::Solver { error, .. } if error.is_infeasibility() => 3,
            BenchError::Solver {
                error: NmpcError::NoTerminalLaw(_) | NmpcError::UnboundedBox { .. },
                ..
            } => 2,
            BenchError::Solver { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::Io { .. } => "io",
            BenchError::Solver { error, .. } => error_kind(error),
        }
    }
}

pub(crate) fn error_kind(e: &NmpcError) -> &'static str {
    match e {
        NmpcError::DimensionMismatch { .. } => "dimension_mismatch",
        NmpcError::Contract(_) => "contract",
        NmpcError::InfeasibleWarmStart(_) => "infeasible_warm_start",
        NmpcError::NoOracle { .. } => "no_oracle",
        NmpcError::WarmStartFailure { .. } => "warm_start_failure",
        NmpcError::NoTerminalLaw(_) => "no_terminal_law",
        NmpcError::UnboundedBox { .. } => "unbounded_box",
    }
}
