use thiserror::Error;

/// Failure classes shared by every module of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside the operation's domain (bad sizes, positions, parameters).
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite values, underflow or an integrator drifting out of tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A code, design or recovery condition does not hold.
    #[error("condition violated: {0}")]
    Condition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn numeric<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numeric(msg.into()))
}
