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

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing header row")]
    MissingHeader,

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("response column {0:?} not found in header")]
    MissingResponse(String),

    #[error("non-numeric value {value:?} at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize, value: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },

    #[error("need at least 3 observations, got {0}")]
    TooFewRows(usize),

    #[error("need at least one covariate")]
    NoCovariates,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("correlation matrix not positive definite for these parameters")]
    NotPositiveDefinite,

    #[error("full enumeration over p = {p} covariates exceeds the search budget; use the adaptive search instead")]
    SearchTooLarge { p: usize },

    #[error("threshold already exceeded at initialization")]
    ThresholdExceededAtInit,

    #[error("plan line {line}: {msg}")]
    Plan { line: usize, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
