use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for table of {len} radii")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("budget {budget} too small: {reason}")]
    BudgetTooSmall { budget: u64, reason: String },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("delta {delta} is not below the required threshold {threshold}")]
    DeltaAboveThreshold { delta: f64, threshold: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
