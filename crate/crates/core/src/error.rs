use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument failed a precondition (non-finite value, wrong length, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration key is missing or violates an invariant.
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    /// A reference trajectory cannot be realized under the given limits.
    #[error("reference generation violates `{limit}`: {reason}")]
    Generation { limit: String, reason: String },

    #[error("controller `{controller}` failed at step {step}: {source}")]
    Controller {
        controller: String,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
