use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query point {0:?} is not an atom of the distribution")]
    OffSupport(Vec<f64>),

    #[error("point {point:?} lies in no ball of the family")]
    OutsideBalls { point: Vec<f64> },

    #[error("empty training sample")]
    EmptySample,

    #[error("duplicate x-value {0} in spline sample")]
    DuplicateKnot(f64),

    #[error("expected binary labels, found {0} labels")]
    NotBinary(usize),

    #[error("class flip changes the Bayes label (or destroys the margin) at atom {atom}")]
    MarginDestroyed { atom: usize },

    #[error("training failed in trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training failed for teacher {teacher}: {source}")]
    Teacher {
        teacher: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
