use groupsod_tensor::{OpKind, TensorError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("config: {0}")]
    Config(String),

    #[error("input: {0}")]
    Input(String),

    #[error("mask is not binary at index {index} (value {value})")]
    NonBinaryMask { index: usize, value: f64 },

    #[error("missing gradient for parameter {name:?}")]
    MissingGrad { name: String },

    #[error("non-finite loss in epoch {epoch}: first non-finite tensor is tape node {node} ({op})")]
    NonFiniteLoss {
        epoch: usize,
        node: usize,
        op: OpKind,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NetError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
