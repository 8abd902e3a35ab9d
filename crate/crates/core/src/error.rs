use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrroError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("not a probability vector: {0}")]
    NotSimplex(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("budget must be positive for water-filling (got {0}); use greedy_policy for a zero budget")]
    NonPositiveBudget(f64),

    #[error("nondifferentiable point: maximizer of the uncovered rewards is tied between {0} and {1}")]
    TiedMaximizer(usize, usize),

    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DrroError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> DrroError {
    DrroError::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(DrroError::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl From<std::io::Error> for DrroError {
    fn from(e: std::io::Error) -> Self {
        DrroError::Io(e.to_string())
    }
}

impl From<csv::Error> for DrroError {
    fn from(e: csv::Error) -> Self {
        DrroError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DrroError {
    fn from(e: serde_json::Error) -> Self {
        DrroError::Config(e.to_string())
    }
}
