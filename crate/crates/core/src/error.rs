use std::io;

use thiserror::Error;

/// Errors produced by the landscape pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Structurally bad input data (mismatched lengths, bad ordering, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A computed object failed an internal consistency check.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

pub(crate) fn invalid_input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
