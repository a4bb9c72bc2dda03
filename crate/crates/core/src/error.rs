//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A family law with mean other than one was passed where criticality is required.
    #[error("family law is not critical (mean {0})")]
    NonCritical(f64),
    /// A truncation cap was too small for the requested computation.
    #[error("truncation unsafe: {0}")]
    Truncation(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Population or clock counter exceeded the overflow guard.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Configuration could not be parsed or resolved.
    #[error("config: {0}")]
    Config(String),
    /// Filesystem failure while writing artifacts.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
