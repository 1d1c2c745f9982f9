//! Search for local unitary circuits that map a signful many-body
//! wavefunction to a real nonnegative one.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`]: dense complex tensors and pairwise index contraction.
//! * [`linalg`]: QR, singular value decomposition with truncation, and the
//!   singular-value differentiation rule.
//! * [`mps`]: matrix product states with canonical centers, gate
//!   application, entanglement entropy, and perfect sampling.
//! * [`model`]: a two-leg triangular spin ladder (zigzag chain with ring
//!   exchange), sector exact diagonalization, sign diagnostics.
//! * [`circuit`]: parametrized gate layers (`rz` and dense two-qubit
//!   unitaries) in brick-wall arrangement.
//! * [`dense`]: statevector gate kernels used by oracles and by the exact
//!   gradient path.
//! * [`cost`] / [`grad`]: the sampled sign cost and its exactly corrected
//!   gradient estimator.
//! * [`optim`]: Adam and the training loop with deterministic resume.
//!
//! Everything here is computation over `alloc`; file formats and the
//! command line live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
// Numeric kernels below index several arrays with one loop variable; iterator
// rewrites obscure the stride bookkeeping.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod circuit;
pub mod cost;
pub mod dense;
pub mod error;
pub mod grad;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod optim;
pub mod tensor;
pub(crate) mod util;

pub use circuit::{Circuit, GateKind, GateSpec, Layer};
pub use cost::{CostParams, CostReport};
pub use error::{CoreError, Result};
pub use grad::{GradientMode, GradientReport};
pub use linalg::SvdResult;
pub use model::{GroundStateResult, LadderModel};
pub use mps::{MatrixProductState, SampleBatch, TruncOptions};
pub use optim::{Checkpoint, IterationRecord, StopReason, TrainConfig, TrainOutcome};
pub use tensor::{Tensor, C64};
