use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("statistic of an empty sample is undefined")]
    EmptyInput,

    #[error("mean pairwise distance needs at least two rows, got {0}")]
    TooFewRows(usize),

    #[error("value is not finite at index {0}")]
    NonFinite(usize),

    #[error(
        "faces from more than one account ({first:?} and {second:?}) in a single-account operation"
    )]
    MixedAccounts { first: String, second: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("row count mismatch: {vectors} embedding rows but {records} manifest records")]
    RowCountMismatch { vectors: usize, records: usize },

    #[error("duplicate face_id {0:?}")]
    DuplicateFaceId(String),

    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("face {0:?} has no ground-truth label")]
    Unlabeled(String),

    #[error("identity {label:?} has {count} image(s); at least 2 are required")]
    IdentityTooSmall { label: String, count: usize },

    #[error("requested {requested} faces but only {available} are available")]
    Insufficient { requested: usize, available: usize },

    #[error("label {0:?} appears among both probes and distractors")]
    LabelOverlap(String),

    #[error("no genuine pairs in probe set")]
    NoGenuinePairs,

    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run interrupted after {0} completed account(s)")]
    Interrupted(usize),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input files or data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidConfig(_) | Error::InvalidSpec(_))
    }
}
