//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state index {index} out of range for a table of size {size}")]
    InvalidState { index: usize, size: usize },

    #[error("non-finite {what} at step {step}: {value}")]
    NonFinite { what: &'static str, step: u64, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("transition row {row} sums to {sum}, not 1")]
    NonStochastic { row: usize, sum: f64 },

    #[error("{0}")]
    Config(String),

    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable kind, used by the CLI error summary.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidState { .. } => "invalid_state",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonStochastic { .. } => "non_stochastic",
            Error::Config(_) => "config",
            Error::Output(_) => "output",
        }
    }
}
