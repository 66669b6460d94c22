use thiserror::Error;

use crate::constraints::FeasibilityReport;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmpcError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("warm start is infeasible ({0})")]
    InfeasibleWarmStart(FeasibilityReport),

    #[error("no feasible sequence found after {budget} random draws")]
    NoOracle { budget: usize },

    #[error("no feasible warm start at k={k} after {attempts} candidate appends")]
    WarmStartFailure { k: usize, attempts: usize },

    #[error("plant `{0}` has no terminal control law")]
    NoTerminalLaw(String),

    #[error("input box coordinate {coordinate} is unbounded")]
    UnboundedBox { coordinate: usize },
}

impl NmpcError {
    /// True for errors that mean "no feasible plan could be produced".
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            NmpcError::InfeasibleWarmStart(_)
                | NmpcError::NoOracle { .. }
                | NmpcError::WarmStartFailure { .. }
        )
    }
}

pub type Result<T, E = NmpcError> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(NmpcError::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
