use std::path::PathBuf;

use crate::Pmid;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Network or HTTP-level failure. Safe to retry.
    #[error("transport error (retryable): {0}")]
    Transport(String),

    /// NCBI answered, but with an error banner instead of results.
    #[error("remote error: {0}")]
    Remote(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported corpus schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("taxonomy error: {0}")]
    Taxonomy(String),

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("duplicate annotation for pair {comment}->{target} at row {row}")]
    DuplicateAnnotation { comment: Pmid, target: Pmid, row: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error came from I/O or the network rather than from
    /// invalid domain input. The CLI maps these to a distinct exit code.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Transport(_) | Error::Remote(_)
        )
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }
}
