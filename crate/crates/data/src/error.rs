use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: byte {offset}: {what}")]
    Malformed {
        path: PathBuf,
        offset: usize,
        what: String,
    },

    #[error("{path}: truncated payload at byte {offset}: expected {expected} bytes, got {got}")]
    Truncated {
        path: PathBuf,
        offset: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),

    #[error("manifest entry {name:?} duplicated")]
    DuplicateName { name: String },

    #[error("sample {name:?}: {what}")]
    BadSample { name: String, what: String },
}

impl DataError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
