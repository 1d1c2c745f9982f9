//! Release gate: nine end-to-end criteria covering physics recovery,
//! estimator correctness, sampler statistics, tensor-network fidelity,
//! the hardness trend under ring coupling, and bit-exact reproducibility.
//! Each test prints one `[criterion k] ...: PASS/FAIL` verdict line with
//! its measured numbers; tolerances are pinned next to the asserts.
//!
//! Criterion 8's depth-monotonicity clause is a known red at this scale:
//! the sweep reproduces the coupling-hardness ordering, but converged
//! depth-2 circuits trade average sign for sampling-weight concentration
//! and land below depth 1. The failure message and the README's known
//! limitations section carry the analysis; the clause is asserted
//! faithfully rather than weakened.

use std::fmt::Write as _;
use std::fs;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex;
use positivize_cli::commands::{final_metrics, prepare_ground_state, read_sweep_csv};
use positivize_cli::config::EvalSection;
use positivize_core::circuit::{Circuit, GateKind};
use positivize_core::cost::{batch_report, CostParams};
use positivize_core::grad::{
    exact_expectation_cost, frozen_effective_cost, gradient_dense, GradientMode,
};
use positivize_core::model::{ground_state, LadderModel};
use positivize_core::mps::{MatrixProductState, SampleBatch, TruncOptions};
use positivize_core::optim::{train, TrainConfig};
use positivize_core::tensor::C64;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use tempfile::TempDir;

fn verdict(idx: usize, label: &str, ok: bool, detail: &str) {
    let state = if ok { "PASS" } else { "FAIL" };
    println!("[criterion {idx}] {label}: {state} ({detail})");
}

// ------------------------------------------------------------ rng helpers

fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1 = uniform(rng).max(1e-300);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_state(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..1usize << n)
        .map(|_| Complex::new(normal(&mut rng), normal(&mut rng)))
        .collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

fn random_circuit(n: usize, depth: usize, kind: GateKind, seed: u64) -> Circuit {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut circuit = Circuit::brick_wall(n, depth, kind).unwrap();
    let scale = match kind {
        GateKind::Rz => 1.5,
        GateKind::GeneralTwoQubit => 0.5,
    };
    let params: Vec<f64> = (0..circuit.param_count())
        .map(|_| scale * normal(&mut rng))
        .collect();
    circuit.set_params(&params).unwrap();
    circuit
}

// ------------------------------------------------------- circle statistics

fn circ_mean(angles: &[f64]) -> f64 {
    let s: f64 = angles.iter().map(|a| a.sin()).sum();
    let c: f64 = angles.iter().map(|a| a.cos()).sum();
    s.atan2(c)
}

/// Geodesic distance on the circle, in [0, pi].
fn circ_dist(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

// --------------------------------------------------- finite differences

fn fd_frozen_gradient(
    circuit: &Circuit,
    input: &[C64],
    batch: &SampleBatch,
    p: &CostParams,
    frozen: &[f64],
    h: f64,
) -> Vec<f64> {
    let base = circuit.params();
    (0..base.len())
        .map(|k| {
            let mut probe = circuit.clone();
            let mut shifted = base.clone();
            shifted[k] += h;
            probe.set_params(&shifted).unwrap();
            let up = frozen_effective_cost(&probe, input, batch, p, frozen).unwrap();
            shifted[k] = base[k] - h;
            probe.set_params(&shifted).unwrap();
            let down = frozen_effective_cost(&probe, input, batch, p, frozen).unwrap();
            (up - down) / (2.0 * h)
        })
        .collect()
}

// ------------------------------------------------- shared training recipe

/// The pinned optimization protocol: depth-1 z-rotation layer, seeded init,
/// defaults elsewhere (1000 samples, Adam at 0.01, plateau stopping), and
/// an enumerated final evaluation.
fn train_rz_once(model: &LadderModel, seed: u64) -> (f64, Vec<(usize, f64)>, usize) {
    let (psi, _, _) = prepare_ground_state(model, 1e-12, 1024).unwrap();
    let config = TrainConfig {
        max_iters: 1500,
        seed,
        depth: 1,
        gate_kind: GateKind::Rz,
        ..TrainConfig::default()
    };
    let outcome = train(&psi, &config).unwrap();
    let (metrics, _) = final_metrics(&psi, &outcome.circuit, &config, &EvalSection::default()).unwrap();
    let angles: Vec<(usize, f64)> = outcome.circuit.layers[0]
        .gates
        .iter()
        .map(|g| (g.site, g.params[0]))
        .collect();
    (metrics.hard_avg_sign, angles, outcome.trace.records.len())
}

// =========================================================== criterion 1

#[test]
fn c1_heisenberg_rz_reaches_positive_sign_with_sublattice_clusters() {
    let start = Instant::now();
    let mut detail = String::new();
    let mut ok = true;

    for n in [8usize, 12] {
        let model = LadderModel::new(n, 1.0, 0.0, 0.0).unwrap();
        let (sign, angles, iters) = train_rz_once(&model, 1);

        let evens: Vec<f64> = angles
            .iter()
            .filter(|(s, _)| s % 2 == 0)
            .map(|&(_, a)| a)
            .collect();
        let odds: Vec<f64> = angles
            .iter()
            .filter(|(s, _)| s % 2 == 1)
            .map(|&(_, a)| a)
            .collect();
        let mean_e = circ_mean(&evens);
        let mean_o = circ_mean(&odds);
        let spread = evens
            .iter()
            .map(|&a| circ_dist(a, mean_e))
            .chain(odds.iter().map(|&a| circ_dist(a, mean_o)))
            .fold(0.0f64, f64::max);
        let separation = circ_dist(mean_e, mean_o);

        let here = sign >= 0.99
            && spread <= 0.35
            && (separation - std::f64::consts::PI).abs() <= 0.1;
        ok &= here;
        write!(
            detail,
            "n={n}: sign {sign:.6}, cluster separation {:.4}pi, spread {spread:.4} rad, {iters} iters; ",
            separation / std::f64::consts::PI
        )
        .unwrap();
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 300.0;
    write!(detail, "{elapsed:.0}s of 300s").unwrap();

    verdict(
        1,
        "alternating-rotation layer positivizes the unfrustrated chain",
        ok,
        &detail,
    );
    assert!(ok, "{detail}");
}

// =========================================================== criterion 2

/// Best split of circle-sorted angles into two contiguous arcs, by summed
/// squared circular deviation. Returns the member indices of one arc.
fn best_two_arc_split(angles: &[f64]) -> (Vec<usize>, f64) {
    let m = angles.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| angles[a].partial_cmp(&angles[b]).unwrap());

    let mut best_cost = f64::INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut best_sep = 0.0;
    for start in 0..m {
        for len in 1..m {
            let arc: Vec<usize> = (0..len).map(|k| order[(start + k) % m]).collect();
            let rest: Vec<usize> = (len..m).map(|k| order[(start + k) % m]).collect();
            let spread = |ids: &[usize]| -> (f64, f64) {
                let vals: Vec<f64> = ids.iter().map(|&i| angles[i]).collect();
                let mean = circ_mean(&vals);
                (vals.iter().map(|&a| circ_dist(a, mean).powi(2)).sum(), mean)
            };
            let (ca, ma) = spread(&arc);
            let (cb, mb) = spread(&rest);
            if ca + cb < best_cost {
                best_cost = ca + cb;
                best = arc.clone();
                best_sep = circ_dist(ma, mb);
            }
        }
    }
    (best, best_sep)
}

#[test]
fn c2_strong_next_neighbor_coupling_mixes_the_cluster_sublattices() {
    let start = Instant::now();
    let model = LadderModel::new(8, 1.0, 2.0, 0.0).unwrap();
    let (sign, angles, iters) = train_rz_once(&model, 2);

    let values: Vec<f64> = angles.iter().map(|&(_, a)| a).collect();
    let (arc, separation) = best_two_arc_split(&values);
    let mut cluster: Vec<usize> = arc.iter().map(|&i| angles[i].0).collect();
    cluster.sort_unstable();
    let evens: Vec<usize> = (0..8).step_by(2).collect();
    let odds: Vec<usize> = (1..8).step_by(2).collect();
    let mixes = cluster != evens && cluster != odds;

    let elapsed = start.elapsed().as_secs_f64();
    let ok = sign >= 0.95
        && (separation - std::f64::consts::PI).abs() <= 0.1
        && mixes
        && elapsed <= 300.0;
    let detail = format!(
        "sign {sign:.6}, separation {:.4}pi, cluster sites {cluster:?}, {iters} iters, {elapsed:.0}s of 300s",
        separation / std::f64::consts::PI
    );
    verdict(
        2,
        "two rotation clusters pi apart, not aligned with sublattices",
        ok,
        &detail,
    );
    assert!(ok, "{detail}");
}

// =========================================================== criterion 3

#[test]
fn c3_corrected_gradient_differentiates_the_expectation_cost() {
    let n = 4;
    let model = LadderModel::new(n, 1.0, 0.0, 0.0).unwrap();
    let input = ground_state(&model).unwrap().state;
    let circuit = random_circuit(n, 2, GateKind::GeneralTwoQubit, 311);
    let p = CostParams {
        gamma: 0.5,
        alpha: 0.01,
        beta: 10.0,
        n_samples: 1 << n,
    };

    // Full-basis batch weighted by the output distribution at the current
    // parameters: there the corrected estimator's gradient equals the
    // gradient of the exact expectation cost.
    let mut phi = input.clone();
    circuit.apply_to_dense(&mut phi).unwrap();
    let batch = SampleBatch::full_basis(n, &phi).unwrap();
    let corrected = gradient_dense(&circuit, &input, &batch, &p, GradientMode::Corrected).unwrap();
    let naive = gradient_dense(&circuit, &input, &batch, &p, GradientMode::Naive).unwrap();

    let base = circuit.params();
    let h = 1e-5;
    let mut corrected_worst: f64 = 0.0;
    let mut naive_worst: f64 = 0.0;
    for k in 0..base.len() {
        let eval = |delta: f64| {
            let mut probe = circuit.clone();
            let mut shifted = base.clone();
            shifted[k] += delta;
            probe.set_params(&shifted).unwrap();
            exact_expectation_cost(&probe, &input, &p).unwrap()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let scale = fd.abs().max(1e-8);
        corrected_worst = corrected_worst.max((corrected.grad[k] - fd).abs() / scale);
        naive_worst = naive_worst.max((naive.grad[k] - fd).abs() / scale);
    }

    let ok = corrected_worst < 1e-6 && naive_worst > 1e-3;
    let detail = format!(
        "corrected worst rel err {corrected_worst:.2e} (tol 1e-6), naive worst {naive_worst:.2e} (must exceed 1e-3), {} params",
        base.len()
    );
    verdict(
        3,
        "score correction makes the sampled gradient exact where the plain one is biased",
        ok,
        &detail,
    );
    assert!(ok, "{detail}");
}

// =========================================================== criterion 4

#[test]
fn c4_sampled_gradients_match_finite_differences_across_instances() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for instance in 0..20u64 {
        let n = 4 + 2 * (instance as usize % 2); // 4 or 6
        let depth = 1 + instance as usize % 3; // 1..=3
        let kind = if instance % 2 == 0 {
            GateKind::GeneralTwoQubit
        } else {
            GateKind::Rz
        };
        let input = random_state(n, 1000 + instance);
        let circuit = random_circuit(n, depth, kind, 2000 + instance);
        let p = CostParams {
            gamma: [0.3, 0.5, 0.7][instance as usize % 3],
            alpha: if instance % 2 == 0 { 0.02 } else { 0.0 },
            beta: [6.0, 10.0][instance as usize % 2],
            n_samples: 24,
        };

        // Sample the batch the way training does: from the circuit output.
        let (psi, _) = MatrixProductState::compress_dense(&input, 1e-12, 64).unwrap();
        let opts = TruncOptions {
            cutoff: 1e-12,
            max_rank: 64,
            strict_unitary: true,
        };
        let (out, _) = circuit.apply_to_mps(&psi, &opts).unwrap();
        let batch = out.perfect_sample(24, 3000 + instance).unwrap();

        let report = gradient_dense(&circuit, &input, &batch, &p, GradientMode::Corrected).unwrap();
        let fd = fd_frozen_gradient(&circuit, &input, &batch, &p, &report.frozen_scores, 1e-5);
        for (a, b) in report.grad.iter().zip(&fd) {
            let err = (a - b).abs() / (1e-4 * b.abs() + 1e-8);
            worst = worst.max(err);
            assert!(
                err <= 1.0,
                "instance {instance} (n={n}, depth={depth}, {kind:?}): analytic {a:.6e} vs fd {b:.6e}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = elapsed <= 120.0;
    let detail = format!(
        "20 instances, worst error {:.3} of the rtol 1e-4 / atol 1e-8 budget, {elapsed:.0}s of 120s",
        worst
    );
    verdict(4, "analytic gradients track finite differences on random instances", ok, &detail);
    assert!(ok, "{detail}");
}

// =========================================================== criterion 5

/// Upper regularized incomplete gamma Q(a, x); series for small x,
/// Lentz continued fraction otherwise.
fn gamma_q(a: f64, x: f64) -> f64 {
    let ln_gamma_a = ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        1.0 - sum * (-x + a * x.ln() - ln_gamma_a).exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-15 {
                break;
            }
        }
        (-x + a * x.ln() - ln_gamma_a).exp() * h
    }
}

fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

#[test]
fn c5_perfect_sampler_matches_born_statistics() {
    let n = 6;
    let n_samples = 100_000usize;
    // Magnitudes bounded away from zero keep every chi-square bin healthy.
    let mut rng = ChaCha12Rng::seed_from_u64(3141);
    let mut dense: Vec<C64> = (0..1usize << n)
        .map(|_| Complex::from_polar(0.5 + uniform(&mut rng), 2.0 * std::f64::consts::PI * uniform(&mut rng)))
        .collect();
    let norm: f64 = dense.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in dense.iter_mut() {
        *z /= norm;
    }

    let (psi, _) = MatrixProductState::compress_dense(&dense, 0.0, 64).unwrap();
    let batch = psi.perfect_sample(n_samples, 59).unwrap();
    let mut counts = vec![0usize; 1 << n];
    for j in 0..batch.len() {
        counts[batch.dense_index(j)] += 1;
    }

    let probs: Vec<f64> = dense.iter().map(|z| z.norm_sqr()).collect();
    let tv: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| (c as f64 / n_samples as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let expected = p * n_samples as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    let dof = (1usize << n) - 1;
    let p_value = gamma_q(dof as f64 / 2.0, chi2 / 2.0);

    let ok = tv < 0.02 && p_value > 0.001;
    let detail = format!(
        "{n_samples} draws from 2^{n} bins: total variation {tv:.4} (tol 0.02), chi-square {chi2:.1}/{dof} dof, p {p_value:.3} (floor 0.001)"
    );
    verdict(5, "sampler reproduces the squared-amplitude distribution", ok, &detail);
    assert!(ok, "{detail}");
}

// =========================================================== criterion 6

#[test]
fn c6_mps_gate_application_matches_dense_evolution() {
    let mut detail = String::new();
    let mut ok = true;
    for n in [4usize, 6, 8] {
        let input = random_state(n, 600 + n as u64);
        let circuit = random_circuit(n, 2, GateKind::GeneralTwoQubit, 700 + n as u64);

        let mut exact = input.clone();
        circuit.apply_to_dense(&mut exact).unwrap();

        let (psi, _) = MatrixProductState::compress_dense(&input, 0.0, 256).unwrap();
        let lossless = TruncOptions {
            cutoff: 0.0,
            max_rank: 256,
            strict_unitary: true,
        };
        let (out, _) = circuit.apply_to_mps(&psi, &lossless).unwrap();
        let dense_out = out.to_dense().unwrap();
        let overlap: Complex<f64> = exact
            .iter()
            .zip(&dense_out)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let fidelity = overlap.norm();

        let truncated = TruncOptions {
            cutoff: 1e-6,
            max_rank: 256,
            strict_unitary: true,
        };
        let (_, stats) = circuit.apply_to_mps(&psi, &truncated).unwrap();

        let here = fidelity >= 1.0 - 1e-10 && stats.max_truncation <= 1e-6;
        ok &= here;
        write!(
            detail,
            "n={n}: lossless fidelity 1-{:.1e}, worst truncated SVD discards {:.1e}; ",
            (1.0 - fidelity).max(0.0),
            stats.max_truncation.max(0.0)
        )
        .unwrap();
    }
    verdict(6, "gate-by-gate MPS evolution equals the dense statevector", ok, &detail);
    assert!(ok, "{detail}");
}

// =========================================================== criterion 7

#[test]
fn c7_entropy_value_gradient_and_cost_floor() {
    // Bell pair: entropy exactly ln 2.
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let bell = vec![
        Complex::new(amp, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(amp, 0.0),
    ];
    let (psi, _) = MatrixProductState::compress_dense(&bell, 0.0, 4).unwrap();
    let entropy = psi.entanglement_entropy(1).unwrap();
    let bell_err = (entropy - std::f64::consts::LN_2).abs();
    let bell_ok = bell_err <= 1e-10;

    // Entropy gradient through the circuit: a single zero-weight sample
    // silences the batch term, leaving alpha * S and its singular-value
    // pullback as the only contribution.
    let n = 4;
    let input = random_state(n, 741);
    let circuit = random_circuit(n, 2, GateKind::GeneralTwoQubit, 742);
    let p = CostParams {
        gamma: 0.5,
        alpha: 1.0,
        beta: 5.0,
        n_samples: 1,
    };
    let batch = SampleBatch::from_parts(
        n,
        vec![0u8; n],
        vec![Complex::new(0.0, 0.0)],
        Some(vec![0.0]),
    )
    .unwrap();
    let report = gradient_dense(&circuit, &input, &batch, &p, GradientMode::Corrected).unwrap();
    let fd = fd_frozen_gradient(&circuit, &input, &batch, &p, &report.frozen_scores, 1e-5);
    let mut grad_worst: f64 = 0.0;
    for (a, b) in report.grad.iter().zip(&fd) {
        grad_worst = grad_worst.max((a - b).abs() / (1e-5 * b.abs() + 1e-9));
    }
    let grad_ok = grad_worst <= 1.0;

    // A manifestly positive state pins the sampled cost at its minimum
    // gamma - 1 once the soft sign saturates and the entropy term is off.
    let m = 4;
    let pos = vec![Complex::new(0.25, 0.0); 1 << m];
    let (pos_psi, _) = MatrixProductState::compress_dense(&pos, 0.0, 16).unwrap();
    let pos_batch = pos_psi.perfect_sample(400, 11).unwrap();
    let floor_p = CostParams {
        gamma: 0.75,
        alpha: 0.0,
        beta: 200.0,
        n_samples: 400,
    };
    let floor_report = batch_report(&pos_batch, &floor_p, 0.0).unwrap();
    let floor_err = (floor_report.soft_cost - (floor_p.gamma - 1.0)).abs();
    let floor_ok = floor_report.hard_avg_sign == 1.0 && floor_err <= 1e-12;

    let ok = bell_ok && grad_ok && floor_ok;
    let detail = format!(
        "Bell entropy off by {bell_err:.1e} (tol 1e-10); entropy gradient worst {grad_worst:.3} of rtol 1e-5 budget; positive-state cost off floor by {floor_err:.1e}, sign {}",
        floor_report.hard_avg_sign
    );
    verdict(7, "entropy value, its gradient, and the positive-state cost floor", ok, &detail);
    assert!(ok, "{detail}");
}

// =========================================================== criterion 8

#[test]
fn c8_ring_coupling_hardness_and_depth_trend() {
    let start = Instant::now();
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("sweep.toml");
    fs::write(
        &config,
        "schema = \"config_v1\"\n\n[model]\nn_sites = 12\n\n[train]\nmax_iters = 600\ngate_kind = \"general_two_qubit\"\n\n[train.cost]\nn_samples = 300\n",
    )
    .unwrap();

    let out_dir = dir.path().join("sweep");
    let output = Command::new(env!("CARGO_BIN_EXE_positivize"))
        .args([
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--jr",
            "0.25,0.75",
            "--depth",
            "1,2,3",
            "--seeds",
            "1,2,3,4,5",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .expect("binary spawns");
    assert!(
        output.status.success(),
        "sweep failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let rows = read_sweep_csv(&out_dir.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.status == "ok"));
    let sign = |jr: f64, depth: usize, seed: u64| -> f64 {
        rows.iter()
            .find(|r| r.jr == jr && r.depth == depth && r.seed == seed)
            .and_then(|r| r.final_sign)
            .unwrap()
    };

    // Clause A: at the fixed depth-2 budget, the weaker ring coupling must
    // win the paired comparison on at least 4 of 5 seeds.
    let wins = (1..=5)
        .filter(|&s| sign(0.25, 2, s) > sign(0.75, 2, s))
        .count();
    let clause_a = wins >= 4;

    // Clause B: for each coupling, mean final sign must be non-decreasing
    // in depth, with 0.02 of slack.
    let mean = |jr: f64, depth: usize| -> f64 {
        (1..=5).map(|s| sign(jr, depth, s)).sum::<f64>() / 5.0
    };
    let mut clause_b = true;
    let mut depth_detail = String::new();
    for jr in [0.25, 0.75] {
        let m: Vec<f64> = (1..=3).map(|d| mean(jr, d)).collect();
        clause_b &= m[1] >= m[0] - 0.02 && m[2] >= m[1] - 0.02;
        write!(
            depth_detail,
            "jr={jr}: means {:.4}/{:.4}/{:.4}; ",
            m[0], m[1], m[2]
        )
        .unwrap();
    }

    let elapsed = start.elapsed().as_secs_f64();
    let ok = clause_a && clause_b && elapsed <= 1800.0;
    let detail = format!(
        "pairing wins {wins}/5 (need 4); {depth_detail}{elapsed:.0}s of 1800s"
    );
    verdict(
        8,
        "weaker ring coupling easier at fixed budget; sign non-decreasing in depth",
        ok,
        &detail,
    );
    assert!(clause_a && elapsed <= 1800.0, "{detail}");
    assert!(
        clause_b,
        "depth monotonicity violated: {} Known limitation at this \
         scale: with the soft-sign objective, converged depth-2 brick walls buy \
         cost by concentrating sampling weight on large positive amplitudes \
         (the first layout able to act across the center cut), leaving \
         small-weight negative amplitudes behind, so their enumerated sign \
         lands below depth 1 even though the optimized cost itself is monotone \
         in depth. Reproduced across step sizes, cost temperatures, entropy \
         weights, batch sizes, init scales, and budgets to 3000 iterations. \
         See README, Known limitations.",
        depth_detail
    );
}

// =========================================================== criterion 9

#[test]
fn c9_identical_seeds_reproduce_artifacts_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_positivize");
    let gs = dir.path().join("gs8.mps");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().expect("binary spawns");
        assert!(
            out.status.success(),
            "command {args:?} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&["groundstate", "--n", "8", "--out", gs.to_str().unwrap()]);

    let config = dir.path().join("repro.toml");
    fs::write(
        &config,
        "schema = \"config_v1\"\n\n[model]\nn_sites = 8\n\n[train]\nmax_iters = 150\nsnapshot_every = 50\n\n[train.cost]\nn_samples = 200\n",
    )
    .unwrap();

    for name in ["a", "b"] {
        run(&[
            "positivize",
            "--state",
            gs.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--depth",
            "1",
            "--seed",
            "1",
            "--out-dir",
            dir.path().join(name).to_str().unwrap(),
        ]);
    }

    let mut ok = true;
    let mut detail = String::new();
    for name in [
        "trace.jsonl",
        "summary.json",
        "circuit.json",
        "checkpoint.json",
        "snapshots.jsonl",
    ] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        let same = a == b;
        ok &= same;
        write!(detail, "{name} {}; ", if same { "identical" } else { "DIFFERS" }).unwrap();
    }
    let lines = fs::read_to_string(dir.path().join("a/trace.jsonl"))
        .unwrap()
        .lines()
        .count();
    write!(detail, "{lines} trace lines").unwrap();

    verdict(9, "rerunning with the same seed reproduces every numeric artifact", ok, &detail);
    assert!(ok, "{detail}");
}

// Criterion 9 also applies to the ground-state solver feeding every run.
#[test]
fn c9b_ground_state_files_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_positivize");
    for name in ["x.mps", "y.mps"] {
        let out = Command::new(bin)
            .args([
                "groundstate",
                "--n",
                "10",
                "--jr",
                "0.5",
                "--out",
                dir.path().join(name).to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("x.mps")).unwrap();
    let b = fs::read(dir.path().join("y.mps")).unwrap();
    assert_eq!(a, b, "ground-state binary files must be byte-identical");
}
