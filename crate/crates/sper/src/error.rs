use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sper_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: no column named {column:?} in header")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: duplicate id {id:?} on rows {first_row} and {second_row}")]
    DuplicateId {
        path: PathBuf,
        id: String,
        first_row: u64,
        second_row: u64,
    },

    #[error("{path}: row {row}: {message}")]
    BadRow {
        path: PathBuf,
        row: u64,
        message: String,
    },

    #[error("no embedding supplied for record {0:?}")]
    MissingEmbedding(String),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Self::Csv {
            path: path.into(),
            source,
        }
    }
}
