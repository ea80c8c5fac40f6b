//! Dense f64 tensors with reverse-mode automatic differentiation.

mod gemm;
mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_many, relative_error, GradCheckReport};
pub use tape::{Tape, Var};
pub(crate) use tape::softmax_in_place;
pub use tensor::Tensor;

/// Epsilon used by every layer normalization in the encoder.
pub const LAYER_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} needs {} elements, got {len}", shape.iter().product::<usize>())]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("{op}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("{op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },
    #[error("{op}: non-finite input")]
    NonFinite { op: &'static str },
    #[error("expected a scalar, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("backward called with no recorded operations (tape already consumed)")]
    EmptyTape,
}

#[cfg(test)]
mod tests;
