use thiserror::Error;

/// Errors raised by the optimization engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),
    /// A model or environment could not be constructed from its parameters.
    #[error("invalid construction: {0}")]
    Construction(String),
    /// A numerical routine failed (e.g. Cholesky after jitter escalation).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
