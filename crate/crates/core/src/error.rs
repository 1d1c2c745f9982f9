//! Error type shared by all core modules.

use alloc::string::String;
use thiserror::Error;

/// Failures surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Tensor construction or reshape with inconsistent element counts.
    #[error("shape {shape:?} implies {expected} elements, got {got}")]
    ShapeMismatch {
        shape: alloc::vec::Vec<usize>,
        expected: usize,
        got: usize,
    },
    /// Contraction of axes with different extents, or axis indices out of range.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Non-finite values where finite floats are required.
    #[error("numeric error: {0}")]
    NonFinite(String),
    /// Iterative solver failed to reach its tolerance.
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    /// Gate that should be unitary fails the unitarity check.
    #[error("gate is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    /// State required to be normalized is not.
    #[error("state is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },
    /// Invalid argument with context.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Operation requires a problem size the desk-scale kernels refuse.
    #[error("size limit: {0}")]
    SizeLimit(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;

impl CoreError {
    pub(crate) fn dim(msg: impl core::fmt::Display) -> Self {
        CoreError::Dimension(alloc::format!("{msg}"))
    }

    pub(crate) fn arg(msg: impl core::fmt::Display) -> Self {
        CoreError::InvalidArgument(alloc::format!("{msg}"))
    }
}
