use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },

    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample does not conform to schema: {0}")]
    SchemaMismatch(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("no row has an out-of-bag vote; OOB error is undefined")]
    UndefinedOobError,

    #[error("insufficient cluster capacity: feature subset {subset} cannot be placed ({missing} bytes short)")]
    InsufficientCapacity { subset: usize, missing: u64 },

    #[error("feature subset {0} is not hosted by any node")]
    UnhostedSubset(usize),

    #[error("malformed training trace: {0}")]
    MalformedTrace(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
