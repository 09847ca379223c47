use thiserror::Error;

/// Errors raised when inputs violate an operation's preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The input lies outside the mathematical domain of the operation
    /// (nonpositive start of a log grid, divergent integral, zero vector).
    #[error("domain error: {0}")]
    Domain(String),
    /// A malformed or inconsistent argument (mismatched grids, too few points).
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
