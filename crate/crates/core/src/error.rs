use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories. Each maps to one process exit code in the CLI.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid arguments or a violated precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// Missing, unreadable or malformed input data.
    #[error("data error: {0}")]
    Data(String),
    /// A trainer produced a non-finite value.
    #[error("numeric failure at step {step}: {message}")]
    Numeric { step: u64, message: String },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(step: u64, msg: impl Into<String>) -> Self {
        Error::Numeric {
            step,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Data(_) => 2,
            Error::Numeric { .. } => 3,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Data(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Data(err.to_string())
    }
}
