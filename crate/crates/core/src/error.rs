use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("row {row} is not a probability distribution: sums to {sum}")]
    Stochasticity { row: usize, sum: f64 },

    #[error("invalid value: {0}")]
    Value(String),

    #[error("input id {id} out of range for {len} inputs")]
    Index { id: usize, len: usize },

    #[error("subset is empty")]
    EmptySubset,

    #[error("input id {0} is not a member of the subset")]
    Membership(usize),

    #[error("budget {budget} is invalid for {n} inputs")]
    Budget { budget: usize, n: usize },

    #[error("pareto front is empty")]
    EmptyFront,

    #[error("mispredicted input {0} has no fault-cluster label")]
    Coverage(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("need at least {required} non-zero differences, got {actual}")]
    SampleSize { required: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

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

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than a failure of the tool itself.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => true,
        }
    }
}
