//! Adam and the training loop: sample, evaluate, correct, update.
//!
//! One iteration applies the circuit to the input MPS (with truncation),
//! draws a fresh batch of configurations by perfect sampling, computes the
//! corrected gradient through the exact dense contraction, records metrics,
//! and takes an Adam step. Sampling seeds derive deterministically from the
//! base seed and the absolute iteration index, so a run is a pure function
//! of its config and can be resumed bit-exactly from a checkpoint.
//!
//! Stopping: a fixed iteration budget, an optional plateau rule (relative
//! spread of the soft cost over a trailing window), or a numeric failure,
//! in which case the last good state is retained and reported.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;

use crate::circuit::{Circuit, GateKind};
use crate::cost::{CostParams, CostReport};
use crate::error::{CoreError, Result};
use crate::grad::{gradient_dense, GradientMode};
use crate::mps::{MatrixProductState, TruncOptions};
use crate::util::{iteration_seed, normal_f64, splitmix64, uniform_in};

/// Domain tag mixed into the seed for parameter initialization so init and
/// sampling never share a stream.
const INIT_SEED_TAG: u64 = 0x9E3779B97F4A7C15;

/// First and second moment accumulators of Adam.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    eta: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != grad.len() || params.len() != state.m.len() {
        return Err(CoreError::dim("adam: params/grad/state lengths differ"));
    }
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for i in 0..params.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= eta * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Everything a training run depends on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    /// Learning rate.
    pub eta: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Base seed; initialization and per-iteration sampling derive from it.
    pub seed: u64,
    pub cost: CostParams,
    /// Brick-wall depth (0 = identity circuit, metrics only).
    pub depth: usize,
    pub gate_kind: GateKind,
    /// SVD truncation cutoff for the MPS circuit application.
    pub cutoff: f64,
    /// Bond dimension cap for the MPS circuit application.
    pub max_bond: usize,
    /// Emit a checkpoint every this many iterations (0 = never).
    pub checkpoint_every: usize,
    /// Record a parameter snapshot every this many iterations (0 = never).
    pub snapshot_every: usize,
    /// Plateau window length in iterations (0 disables the rule).
    pub plateau_window: usize,
    /// Relative soft-cost spread below which the window counts as flat.
    pub plateau_rel_tol: f64,
    /// Linearly anneal the entropy weight from `cost.alpha` to this value
    /// over the run; `None` keeps it constant.
    pub alpha_end: Option<f64>,
    /// Gradient estimator; `Naive` exists for demonstrations.
    pub grad_mode: GradientMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_iters: 500,
            seed: 1,
            cost: CostParams::default(),
            depth: 1,
            gate_kind: GateKind::Rz,
            cutoff: 1e-6,
            max_bond: 256,
            checkpoint_every: 100,
            snapshot_every: 0,
            plateau_window: 50,
            plateau_rel_tol: 1e-6,
            alpha_end: None,
            grad_mode: GradientMode::Corrected,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(CoreError::arg("eta must be finite and > 0"));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(CoreError::arg(format_args!("{name} must be in [0, 1)")));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(CoreError::arg("adam_eps must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(CoreError::arg("max_iters must be >= 1"));
        }
        if !(self.cutoff >= 0.0 && self.cutoff.is_finite()) {
            return Err(CoreError::arg("cutoff must be finite and >= 0"));
        }
        if self.max_bond == 0 {
            return Err(CoreError::arg("max_bond must be >= 1"));
        }
        if let Some(end) = self.alpha_end {
            if !(end >= 0.0 && end.is_finite()) {
                return Err(CoreError::arg("alpha_end must be finite and >= 0"));
            }
        }
        if self.plateau_rel_tol.is_nan() || self.plateau_rel_tol < 0.0 {
            return Err(CoreError::arg("plateau_rel_tol must be >= 0"));
        }
        Ok(())
    }

    fn trunc_options(&self) -> TruncOptions {
        TruncOptions {
            cutoff: self.cutoff,
            max_rank: self.max_bond,
            strict_unitary: true,
        }
    }

    /// Entropy weight at iteration `i` under the (optional) linear anneal.
    pub fn alpha_at(&self, iter: usize) -> f64 {
        match self.alpha_end {
            None => self.cost.alpha,
            Some(end) => {
                let steps = (self.max_iters.max(2) - 1) as f64;
                let frac = (iter as f64 / steps).min(1.0);
                self.cost.alpha + (end - self.cost.alpha) * frac
            }
        }
    }
}

/// Build the brick-wall circuit with randomized initial parameters:
/// rotation angles uniform in `(-pi, pi)`, general-gate generator entries
/// normal with scale `0.01` (a near-identity start keeps early truncation
/// small on deep circuits).
pub fn init_circuit(n_sites: usize, depth: usize, kind: GateKind, seed: u64) -> Result<Circuit> {
    let mut circuit = Circuit::brick_wall(n_sites, depth, kind)?;
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ INIT_SEED_TAG));
    let params: Vec<f64> = (0..circuit.param_count())
        .map(|_| match kind {
            GateKind::Rz => uniform_in(&mut rng, -core::f64::consts::PI, core::f64::consts::PI),
            GateKind::GeneralTwoQubit => 0.01 * normal_f64(&mut rng),
        })
        .collect();
    circuit.set_params(&params)?;
    Ok(circuit)
}

/// Per-iteration trace entry, recorded before the parameter update.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub iter: usize,
    /// Metrics of the pre-update circuit on this iteration's batch.
    pub report: CostReport,
    /// Value of the differentiated scalar (effective cost).
    pub effective_cost: f64,
    /// Entropy weight in effect this iteration.
    pub alpha: f64,
    /// Total discarded Schmidt weight across this iteration's MPS gates.
    pub truncation: f64,
    /// Largest bond dimension reached while applying the circuit.
    pub max_bond: usize,
    /// Samples whose amplitude hit the logarithm clamp.
    pub clamped_samples: usize,
}

/// Parameters as they stood when iteration `iter` ran.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamSnapshot {
    pub iter: usize,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<ParamSnapshot>,
}

/// Resumable optimizer state; `iter` is the next iteration to run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Checkpoint {
    pub iter: usize,
    pub params: Vec<f64>,
    pub adam: AdamState,
    /// Trailing soft costs for the plateau rule, oldest first.
    pub recent_costs: Vec<f64>,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    MaxIters,
    Plateau,
    NumericFailure,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Circuit holding the final parameters.
    pub circuit: Circuit,
    pub trace: TrainTrace,
    pub stop_reason: StopReason,
    /// Diagnostic when `stop_reason` is `NumericFailure`.
    pub failure: Option<String>,
    /// State to resume from (the last good state on failure).
    pub final_checkpoint: Checkpoint,
}

impl TrainOutcome {
    /// Metrics of the last completed iteration.
    pub fn final_report(&self) -> Option<&CostReport> {
        self.trace.records.last().map(|r| &r.report)
    }
}

/// Events surfaced to an observer during training, in occurrence order.
pub enum TrainEvent<'a> {
    Iteration(&'a IterationRecord),
    Snapshot(&'a ParamSnapshot),
    Checkpoint(&'a Checkpoint),
}

/// Train with the default (silent) observer. See [`train_observed`].
pub fn train(psi_in: &MatrixProductState, config: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(psi_in, config, None, &mut |_| {})
}

/// Run (or resume) the optimization loop. The observer sees every
/// iteration record, parameter snapshot, and checkpoint as they are
/// produced, so callers can stream artifacts to disk.
pub fn train_observed(
    psi_in: &MatrixProductState,
    config: &TrainConfig,
    resume_from: Option<Checkpoint>,
    observer: &mut dyn FnMut(TrainEvent<'_>),
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = psi_in.n_sites();
    let deviation = (psi_in.norm() - 1.0).abs();
    if deviation > 1e-8 {
        return Err(CoreError::NotNormalized { deviation });
    }

    let mut circuit = init_circuit(n, config.depth, config.gate_kind, config.seed)?;
    let mut adam = AdamState::new(circuit.param_count());
    let mut recent = Vec::new();
    let mut start_iter = 0usize;
    if let Some(cp) = resume_from {
        if cp.base_seed != config.seed {
            return Err(CoreError::arg("checkpoint was produced with another seed"));
        }
        if cp.params.len() != circuit.param_count() {
            return Err(CoreError::dim("checkpoint parameter count mismatch"));
        }
        circuit.set_params(&cp.params)?;
        adam = cp.adam;
        recent = cp.recent_costs;
        start_iter = cp.iter;
    }

    let dense_in = psi_in.to_dense()?;
    let opts = config.trunc_options();
    let mut trace = TrainTrace::default();
    let mut stop_reason = StopReason::MaxIters;
    let mut failure = None;

    for iter in start_iter..config.max_iters {
        let cost_now = CostParams {
            alpha: config.alpha_at(iter),
            ..config.cost.clone()
        };

        let step = (|| -> Result<(IterationRecord, Vec<f64>)> {
            let (psi_out, stats) = circuit.apply_to_mps(psi_in, &opts)?;
            let batch = psi_out.perfect_sample(cost_now.n_samples, iteration_seed(config.seed, iter as u64))?;
            let grad_report =
                gradient_dense(&circuit, &dense_in, &batch, &cost_now, config.grad_mode)?;
            if !grad_report.effective_cost.is_finite() {
                return Err(CoreError::NonFinite("effective cost".into()));
            }
            Ok((
                IterationRecord {
                    iter,
                    report: grad_report.report,
                    effective_cost: grad_report.effective_cost,
                    alpha: cost_now.alpha,
                    truncation: stats.total_truncation,
                    max_bond: stats.max_bond,
                    clamped_samples: grad_report.clamped_samples,
                },
                grad_report.grad,
            ))
        })();

        let (record, grad) = match step {
            Ok(pair) => pair,
            Err(e) => {
                stop_reason = StopReason::NumericFailure;
                failure = Some(alloc::format!("iteration {iter}: {e}"));
                break;
            }
        };

        if config.snapshot_every > 0 && iter % config.snapshot_every == 0 {
            let snap = ParamSnapshot {
                iter,
                params: circuit.params(),
            };
            observer(TrainEvent::Snapshot(&snap));
            trace.snapshots.push(snap);
        }
        observer(TrainEvent::Iteration(&record));
        let soft_cost = record.report.soft_cost;
        trace.records.push(record);

        let mut params = circuit.params();
        adam_step(
            &mut params,
            &grad,
            &mut adam,
            config.eta,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        )?;
        circuit.set_params(&params)?;

        if config.plateau_window > 0 {
            recent.push(soft_cost);
            let extra = recent.len().saturating_sub(config.plateau_window);
            if extra > 0 {
                recent.drain(..extra);
            }
        }

        if config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0 {
            let cp = make_checkpoint(iter + 1, &circuit, &adam, &recent, config.seed);
            observer(TrainEvent::Checkpoint(&cp));
        }

        if config.plateau_window > 0 && recent.len() == config.plateau_window {
            let hi = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = recent.iter().cloned().fold(f64::INFINITY, f64::min);
            let mid = recent.iter().sum::<f64>() / recent.len() as f64;
            if (hi - lo) <= config.plateau_rel_tol * mid.abs().max(1e-9) {
                stop_reason = StopReason::Plateau;
                break;
            }
        }
    }

    let end_iter = start_iter + trace.records.len();
    let final_checkpoint = make_checkpoint(end_iter, &circuit, &adam, &recent, config.seed);
    Ok(TrainOutcome {
        circuit,
        trace,
        stop_reason,
        failure,
        final_checkpoint,
    })
}

fn make_checkpoint(
    iter: usize,
    circuit: &Circuit,
    adam: &AdamState,
    recent: &[f64],
    base_seed: u64,
) -> Checkpoint {
    Checkpoint {
        iter,
        params: circuit.params(),
        adam: adam.clone(),
        recent_costs: recent.to_vec(),
        base_seed,
    }
}
