use thiserror::Error;

/// Errors raised by model construction, analysis and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed model file: field `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error("numerical quality check failed: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(field: &str, reason: impl Into<String>) -> Self {
        Error::Parse { field: field.to_string(), reason: reason.into() }
    }
}
