use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("map dimensions differ: {left:?} vs {right:?}")]
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("ground truth is not binary at pixel {index} (value {value})")]
    NonBinaryGroundTruth { index: usize, value: f64 },

    #[error("prediction value {value} at pixel {index} outside [0,1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("map data length {len} does not match {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("unmatched files: {0:?} have no counterpart")]
    Orphans(Vec<String>),

    #[error("pair {name:?}: prediction is {pred:?} but ground truth is {gt:?}")]
    PairSizeMismatch {
        name: String,
        pred: (usize, usize),
        gt: (usize, usize),
    },

    #[error("no image pairs to evaluate")]
    Empty,

    #[error("report line {line}: {what}")]
    ReportParse { line: usize, what: String },

    #[error(transparent)]
    Data(#[from] groupsod_data::DataError),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
