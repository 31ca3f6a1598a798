use thiserror::Error;

/// Errors raised by the accounting, optimisation and oracle routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Rényi orders differ: {left} vs {right}")]
    OrderMismatch { left: f64, right: f64 },

    #[error("infeasible shift schedule at step {step}: shift would become {shift}")]
    InfeasibleSchedule { step: usize, shift: f64 },

    #[error("schedule ends with residual shift {0}; only a shifted bound is valid")]
    ResidualShift(f64),

    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("double-entry mismatch for {what}: closed form {closed_form} vs schedule {schedule}")]
    DoubleEntry {
        what: &'static str,
        closed_form: f64,
        schedule: f64,
    },

    #[error("unsupported convex set: {0}")]
    UnsupportedSet(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("truncated mass {truncated:e} exceeds budget {budget:e}")]
    TruncationExceeded { truncated: f64, budget: f64 },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects NaN and infinities.
pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be >= 0, got {value}")))
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be > 0, got {value}")))
    }
}

pub(crate) fn unit_interval_open(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {value}")))
    }
}
