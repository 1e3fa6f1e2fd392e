//! Tape-based reverse-mode automatic differentiation over row-major `f64`
//! tensors.
//!
//! The engine is deliberately small: every value is a dense N-dimensional
//! `f64` array, every operation records itself on a [`Tape`], and
//! [`Tape::backward`] replays the record in reverse to accumulate gradients
//! into the leaves. There is no implicit broadcasting; callers reshape and
//! [`Tape::repeat`] explicitly, which keeps shape errors at the call site.
//!
//! [`check::grad_check`] compares analytic gradients against central finite
//! differences and is the verification backbone for everything built on top.

mod error;
mod ops;
mod tape;
mod tensor;

pub mod check;

pub use error::TensorError;
pub use tape::{OpKind, ReduceKind, Tape, Var};
pub use tensor::Tensor;

pub type Result<T> = std::result::Result<T, TensorError>;
