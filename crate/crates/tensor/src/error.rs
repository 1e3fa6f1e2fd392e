use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("data length {len} does not match shape {shape:?} (expects {expected})")]
    DataLength {
        shape: Vec<usize>,
        len: usize,
        expected: usize,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("matmul dimension mismatch: {lhs:?} x {rhs:?}")]
    MatmulMismatch { lhs: Vec<usize>, rhs: Vec<usize> },

    #[error("axis {axis} out of range for shape {shape:?}")]
    AxisOutOfRange { axis: usize, shape: Vec<usize> },

    #[error("invalid convolution geometry: input {input:?}, weight {weight:?}, stride {stride}, pad {pad}: {reason}")]
    ConvGeometry {
        input: Vec<usize>,
        weight: Vec<usize>,
        stride: usize,
        pad: usize,
        reason: String,
    },

    #[error("resize {from:?} -> {to:?} not supported: {reason}")]
    ResizeUnsupported {
        from: Vec<usize>,
        to: Vec<usize>,
        reason: String,
    },

    #[error("repeat source shape {src:?} incompatible with target {target:?}")]
    RepeatMismatch { src: Vec<usize>, target: Vec<usize> },

    #[error("cannot reshape {from:?} ({from_len} elements) into {to:?} ({to_len} elements)")]
    ReshapeMismatch {
        from: Vec<usize>,
        from_len: usize,
        to: Vec<usize>,
        to_len: usize,
    },

    #[error("invalid permutation {perm:?} for shape {shape:?}")]
    InvalidPermutation { perm: Vec<usize>, shape: Vec<usize> },

    #[error("concat needs at least one operand")]
    EmptyConcat,

    #[error("duplicate reduction axis {axis}")]
    DuplicateAxis { axis: usize },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("tape already consumed by backward")]
    TapeConsumed,

    #[error("{what} must be finite")]
    NonFiniteInput { what: String },

    #[error("grad_check eps {eps} outside [1e-6, 1e-3]")]
    EpsOutOfRange { eps: f64 },
}
