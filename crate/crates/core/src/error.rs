use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the tensor, decomposition and solver routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid shape {0:?}: order must be >= 1 and every dimension >= 1")]
    InvalidShape(Vec<usize>),
    #[error("data length {actual} does not match shape product {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mask index {index} out of bounds for {len} entries")]
    MaskIndexOutOfBounds { index: usize, len: usize },
    #[error("mask indices must be strictly increasing")]
    MaskNotSorted,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank target {rank} exceeds dimension {dim} on mode {mode}")]
    RankExceedsDimension { mode: usize, rank: usize, dim: usize },
    #[error("zero tensor has no rank estimate")]
    ZeroTensor,
    #[error("empty observation set")]
    EmptyMask,
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("matrix is not positive definite after jitter {0:e}")]
    NotPositiveDefinite(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
