use thiserror::Error;

use crate::metric::ValidationReport;

/// Errors surfaced by every public entry point of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema error at '{pointer}': {message}")]
    Schema { pointer: String, message: String },

    #[error("not a metric: {0}")]
    Metric(ValidationReport),

    #[error("{what} exceeds capacity: {actual} > {limit} (raise via LPTSP_WORK_CAP)")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("graph is disconnected: no path from {0} to {1}")]
    Disconnected(usize, usize),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("internal invariant violated: {0}")]
    Structural(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    /// True for errors caused by bad user input (as opposed to capacity or solver failures).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Schema { .. }
                | Error::Metric(_)
                | Error::Disconnected(..)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
