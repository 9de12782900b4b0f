use thiserror::Error;

/// Errors raised by the geometry, hierarchy and grid routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach relative tolerance {tolerance:e} (last change {change:e})")]
    Quadrature { tolerance: f64, change: f64 },

    #[error("value {value} out of range (maximum {max})")]
    OutOfRange { value: f64, max: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("no sign change of the shooting residual below lambda = {cap}")]
    BracketFailure { cap: f64 },

    #[error("numerical resolution insufficient: {0}")]
    Resolution(String),

    #[error("singular system: non-positive pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index {index} outside 0..={max}")]
    Index { index: usize, max: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("metric validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Error {
    Error::Domain {
        what,
        value,
        domain: domain.into(),
    }
}
