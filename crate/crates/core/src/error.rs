use thiserror::Error;

/// Errors raised by the estimation, transform and risk routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GebError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {message} (interval [{lo}, {hi}], estimate {estimate})")]
    NumericFailure {
        message: String,
        lo: f64,
        hi: f64,
        estimate: f64,
    },
}

impl GebError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GebError::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        GebError::InvalidConfig(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        GebError::NumericFailure {
            message: msg.into(),
            lo: f64::NAN,
            hi: f64::NAN,
            estimate: f64::NAN,
        }
    }
}

pub type Result<T> = std::result::Result<T, GebError>;
