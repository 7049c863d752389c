use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (mode count, domain length, step sizes, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A problem in a config file, tied to the key and line where it was found.
    #[error("{path}:{line}: key `{key}`: {message}")]
    ConfigKey {
        path: PathBuf,
        line: usize,
        key: String,
        message: String,
    },

    /// A caller passed arguments outside an operation's domain.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value appeared in a spectral component.
    #[error("non-finite value in mode {mode}: {what}")]
    Numerical { mode: usize, what: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
