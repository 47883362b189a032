use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no data: {0}")]
    NoData(String),

    #[error("no ground truth: no records carry a received volume")]
    NoGroundTruth,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "vector state space has {states} cells, above the cap of {cap}; use the scalar (aggregated) table instead"
    )]
    StateSpaceTooLarge { states: u128, cap: u128 },

    #[error("time step {t} outside table horizon 0..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("state {0} is outside the table domain")]
    StateOutOfRange(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
