use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid function specification: {0}")]
    InvalidFunction(String),

    #[error("unknown catalog key `{0}`")]
    UnknownKey(String),

    #[error("non-finite evaluation of `{key}` at input {input:?}")]
    NonFinite { key: String, input: Vec<f64> },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidFunction(msg.into())
    }
}
