use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown polarity label {0:?}")]
    UnknownPolarity(String),

    #[error("unknown task {0:?}")]
    UnknownTask(String),

    #[error("invalid task spec: {0}")]
    InvalidTask(String),

    #[error("invalid element order: {0}")]
    InvalidOrder(String),

    #[error("tuple does not match the element set: {0}")]
    ShapeMismatch(String),

    #[error("m = {m} is outside 1..={max}")]
    ViewCount { m: usize, max: usize },

    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{message}")]
    Vocabulary { message: String },

    #[error("token {token} is not allowed in state {state}")]
    DisallowedToken { token: u32, state: String },

    #[error("example {index}: {source}")]
    Scoring {
        index: usize,
        #[source]
        source: BackendError,
    },

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
