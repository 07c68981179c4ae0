use thiserror::Error;

use crate::optimizer::OptimumRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// More probability than the tolerated fraction lies outside the truncated space.
    #[error("truncation overflow: {leakage:.3e} of the probability lies above the truncation (limit {limit})")]
    TruncationOverflow { leakage: f64, limit: f64 },

    /// No squeezing parameter gives a positive key. Carries the best candidate seen.
    #[error("infeasible link: no squeezing parameter yields a positive key (best raw SKR {:.3e})", .best.metrics.skr_per_window)]
    InfeasibleLink { best: Box<OptimumRecord> },

    #[error("infeasible detector `{name}`: no key target reachable even at zero channel loss")]
    InfeasibleDetector { name: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed CSV at row {row}, column `{column}`: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    CsvRead(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Checks that `value` is a probability (finite and in `[0, 1]`).
pub(crate) fn check_unit(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {value}")))
    }
}

pub(crate) fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and >= 0, got {value}")))
    }
}
