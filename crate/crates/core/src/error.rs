use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants map onto the runner's exit codes: `Input` is a configuration
/// or argument problem, `Capacity` means an exhaustive computation was asked
/// for an instance beyond its enumeration cap, and `Internal` means a checked
/// invariant failed at runtime.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
