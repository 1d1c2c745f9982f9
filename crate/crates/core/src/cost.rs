//! Sign cost: soft-sign surrogate, per-sample cost, batch summaries.
//!
//! The per-configuration cost of an output amplitude `a = Psi(sigma)` is
//!
//! ```text
//! C(a) = gamma * |Im a| - (1 - gamma) * soft_sign(Re a, beta)
//! ```
//!
//! averaged over a batch drawn from (or enumerating) `|Psi|^2`, plus an
//! entanglement-entropy penalty `alpha * S` at the central cut. Minimizing
//! drives the imaginary parts to zero and the real parts positive; the
//! per-configuration minimum is `gamma - 1` in the hard-sign limit.
//!
//! The differentiated loss always uses the soft sign; reported metrics
//! (average sign, mean imaginary magnitude) use the hard sign.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::mps::{MatrixProductState, SampleBatch};
use crate::tensor::C64;
use crate::util::pairwise_sum;

/// Hard sign of the real part convention: `+1` above zero, `-1` below,
/// and exactly `0` at zero.
pub fn hard_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Smooth surrogate for the sign function: `2 / (1 + exp(-beta x)) - 1`,
/// equal to `tanh(beta x / 2)`. Odd, monotone, and in `(-1, 1)`.
pub fn soft_sign(x: f64, beta: f64) -> f64 {
    (beta * x / 2.0).tanh()
}

/// Derivative of [`soft_sign`] with respect to `x`.
pub fn soft_sign_slope(x: f64, beta: f64) -> f64 {
    let t = (beta * x / 2.0).tanh();
    beta / 2.0 * (1.0 - t * t)
}

/// Weights of the two cost terms and the sampling/penalty setup.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CostParams {
    /// Convex weight: `gamma` on the imaginary magnitude, `1 - gamma` on
    /// the (negated) sign of the real part. In `[0, 1]`.
    pub gamma: f64,
    /// Entanglement-entropy penalty weight, `>= 0`.
    pub alpha: f64,
    /// Soft-sign sharpness (inverse temperature), `> 0`.
    pub beta: f64,
    /// Batch size for sampled evaluations.
    pub n_samples: usize,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            gamma: 0.5,
            alpha: 0.01,
            beta: 10.0,
            n_samples: 1000,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::arg(format_args!(
                "gamma must be in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(CoreError::arg("alpha must be finite and >= 0"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CoreError::arg("beta must be finite and > 0"));
        }
        if self.n_samples == 0 {
            return Err(CoreError::arg("n_samples must be >= 1"));
        }
        Ok(())
    }
}

/// Per-iteration summary: optimized quantity plus hard metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostReport {
    /// Batch-averaged soft cost including the entropy penalty.
    pub soft_cost: f64,
    /// Batch-averaged hard sign of the real parts, in `[-1, 1]`.
    pub hard_avg_sign: f64,
    /// Batch-averaged `|Im Psi|`.
    pub imag_residual: f64,
    /// Von Neumann entropy at the central cut.
    pub entropy: f64,
    /// Euclidean norm of the parameter gradient (zero when no gradient
    /// was computed).
    pub grad_norm: f64,
}

/// Soft cost of one amplitude (no entropy term).
pub fn amplitude_cost(amp: C64, p: &CostParams) -> f64 {
    p.gamma * amp.im.abs() - (1.0 - p.gamma) * soft_sign(amp.re, p.beta)
}

/// Partial derivatives of [`amplitude_cost`] with respect to
/// `(Re amp, Im amp)`. The `|Im|` kink uses the subgradient `0` at zero.
pub fn amplitude_cost_gradient(amp: C64, p: &CostParams) -> (f64, f64) {
    let d_re = -(1.0 - p.gamma) * soft_sign_slope(amp.re, p.beta);
    let d_im = p.gamma * hard_sign(amp.im);
    (d_re, d_im)
}

/// Weighted batch average of the per-amplitude soft cost (no entropy).
pub fn batch_soft_term(batch: &SampleBatch, p: &CostParams) -> Result<f64> {
    if batch.is_empty() {
        return Err(CoreError::arg("cost of an empty batch"));
    }
    let terms: Vec<f64> = (0..batch.len())
        .map(|j| batch.weight(j) * amplitude_cost(batch.amplitude(j), p))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Weighted batch average of the hard sign of the real parts.
pub fn batch_average_sign(batch: &SampleBatch) -> f64 {
    let terms: Vec<f64> = (0..batch.len())
        .map(|j| batch.weight(j) * hard_sign(batch.amplitude(j).re))
        .collect();
    pairwise_sum(&terms)
}

/// Weighted batch average of `|Im Psi|`.
pub fn batch_imag_residual(batch: &SampleBatch) -> f64 {
    let terms: Vec<f64> = (0..batch.len())
        .map(|j| batch.weight(j) * batch.amplitude(j).im.abs())
        .collect();
    pairwise_sum(&terms)
}

/// Full sampled cost of an output state: batch-averaged soft cost plus
/// `alpha` times the entanglement entropy at the central cut of `psi_out`.
/// The batch must have been drawn from (or enumerate) `psi_out`.
pub fn sample_cost(
    psi_out: &MatrixProductState,
    batch: &SampleBatch,
    p: &CostParams,
) -> Result<f64> {
    p.validate()?;
    if batch.n_sites() != psi_out.n_sites() {
        return Err(CoreError::dim("batch and state site counts differ"));
    }
    let soft = batch_soft_term(batch, p)?;
    let entropy = if p.alpha > 0.0 {
        psi_out.entanglement_entropy(psi_out.n_sites() / 2)?
    } else {
        0.0
    };
    Ok(soft + p.alpha * entropy)
}

/// Batch metrics plus a supplied entropy, bundled for reporting.
pub fn batch_report(batch: &SampleBatch, p: &CostParams, entropy: f64) -> Result<CostReport> {
    let soft = batch_soft_term(batch, p)?;
    Ok(CostReport {
        soft_cost: soft + p.alpha * entropy,
        hard_avg_sign: batch_average_sign(batch),
        imag_residual: batch_imag_residual(batch),
        entropy,
        grad_norm: 0.0,
    })
}
