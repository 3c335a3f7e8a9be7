use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not factorizable even with jitter up to {max_jitter:e}")]
    NotFactorizable { max_jitter: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("posterior has {observed} observations for {queried} queried points")]
    ObservationsMissing { queried: usize, observed: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("gram matrix of the centers is degenerate (jitter {jitter:e} needed)")]
    DegenerateGram { jitter: f64 },

    #[error("action set is empty")]
    EmptyActionSet,

    #[error("action {0} is not in the offered action set")]
    ActionNotInSet(usize),

    #[error("base algorithm {0} is not active")]
    InactiveBase(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch { expected, actual }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
