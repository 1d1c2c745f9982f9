//! Implementations behind the CLI subcommands.
//!
//! Each command resolves its configuration (defaults, then config
//! file, then flag overrides), runs, writes its artifacts, and leaves
//! a manifest next to them. The functions are plain library code so
//! integration tests can drive them in-process; `main` only parses
//! flags and maps errors to exit codes.

use crate::config::{EvalSection, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{
    read_circuit, read_json, read_mps, write_circuit, write_json, write_mps, JsonLines,
    TRACE_SCHEMA,
};
use crate::manifest::ManifestBuilder;
use crate::metrics::{evaluate, Metrics};
use positivize_core::model::{ground_state, GroundStateResult, LadderModel};
use positivize_core::mps::TruncOptions;
use positivize_core::optim::{train_observed, Checkpoint, StopReason, TrainConfig, TrainEvent};
use positivize_core::{Circuit, GateKind, MatrixProductState};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const GROUNDSTATE_SCHEMA: &str = "groundstate_v1";
pub const SUMMARY_SCHEMA: &str = "summary_v1";
pub const CHECKPOINT_SCHEMA: &str = "checkpoint_v1";
pub const SNAPSHOTS_SCHEMA: &str = "snapshots_v1";
pub const SWEEP_SCHEMA: &str = "sweep_v1";

// ---------------------------------------------------------------- groundstate

#[derive(Debug, Clone)]
pub struct GroundstateArgs {
    pub config: Option<PathBuf>,
    pub n: Option<usize>,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
    pub jr: Option<f64>,
    pub out: PathBuf,
}

/// Sidecar metadata written next to the MPS file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundstateMeta {
    pub schema: String,
    pub model: LadderModel,
    pub energy: f64,
    /// Gap to the next eigenvalue in the zero-magnetization sector.
    pub degeneracy_gap: f64,
    /// Eigenpair residual of the solver.
    pub residual: f64,
    /// Discarded weight summed over the dense-to-MPS compression.
    pub compression_truncation: f64,
    pub bond_dims: Vec<usize>,
    pub state_file: String,
}

/// Solve the model and compress the ground state into MPS form.
pub fn prepare_ground_state(
    model: &LadderModel,
    cutoff: f64,
    max_bond: usize,
) -> Result<(MatrixProductState, GroundStateResult, f64)> {
    let gs = ground_state(model)?;
    let (mut psi, truncation) = MatrixProductState::compress_dense(&gs.state, cutoff, max_bond)?;
    psi.normalize();
    Ok((psi, gs, truncation))
}

pub fn cmd_groundstate(args: &GroundstateArgs, cli_args: &[String]) -> Result<GroundstateMeta> {
    let mut config = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(n) = args.n {
        config.model.n_sites = n;
    }
    if let Some(j1) = args.j1 {
        config.model.j1 = j1;
    }
    if let Some(j2) = args.j2 {
        config.model.j2 = j2;
    }
    if let Some(jr) = args.jr {
        config.model.jr = jr;
    }
    let model = config.model.to_model()?;

    let mut manifest = ManifestBuilder::new("groundstate", &config).with_args(cli_args);
    let (psi, gs, truncation) =
        prepare_ground_state(&model, config.groundstate.cutoff, config.groundstate.max_bond)?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    write_mps(&args.out, &psi)?;
    let meta = GroundstateMeta {
        schema: GROUNDSTATE_SCHEMA.to_string(),
        model,
        energy: gs.energy,
        degeneracy_gap: gs.degeneracy_gap,
        residual: gs.residual,
        compression_truncation: truncation,
        bond_dims: psi.bond_dims(),
        state_file: args.out.display().to_string(),
    };
    let meta_path = args.out.with_extension("meta.json");
    write_json(&meta_path, &meta)?;

    manifest.record_output(&args.out);
    manifest.record_output(&meta_path);
    manifest.finish(&args.out.with_extension("manifest.json"))?;
    Ok(meta)
}

// ----------------------------------------------------------------- positivize

#[derive(Debug, Clone)]
pub struct PositivizeArgs {
    pub state: PathBuf,
    pub config: Option<PathBuf>,
    pub depth: Option<usize>,
    pub gate_kind: Option<GateKind>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub samples: Option<usize>,
    pub resume: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub schema: String,
    pub checkpoint: Checkpoint,
}

/// Final state of a training run; everything here is derived from the
/// run's numeric outputs, so the file is bit-identical across reruns
/// with the same config and seed.
#[derive(Debug, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub n_sites: usize,
    pub depth: usize,
    pub gate_kind: GateKind,
    pub seed: u64,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    pub failure: Option<String>,
    /// Discarded Schmidt weight summed over all training iterations.
    pub total_truncation: f64,
    /// Largest bond dimension reached during training.
    pub max_bond_seen: usize,
    /// Discarded weight of the final evaluation pass.
    pub final_truncation: f64,
    pub final_effective_cost: Option<f64>,
    pub final_soft_cost: Option<f64>,
    /// Metrics of the trained circuit applied to the input state.
    pub metrics: Metrics,
}

/// Apply `circuit` to the input state with the training truncation
/// settings and evaluate the resulting metrics.
pub fn final_metrics(
    psi_in: &MatrixProductState,
    circuit: &Circuit,
    train: &TrainConfig,
    eval: &EvalSection,
) -> Result<(Metrics, f64)> {
    let opts = TruncOptions {
        cutoff: train.cutoff,
        max_rank: train.max_bond,
        strict_unitary: true,
    };
    let (psi_out, stats) = circuit.apply_to_mps(psi_in, &opts)?;
    let metrics = evaluate(&psi_out, eval.n_samples, eval.seed)?;
    Ok((metrics, stats.total_truncation))
}

pub fn cmd_positivize(args: &PositivizeArgs, cli_args: &[String]) -> Result<Summary> {
    let mut config = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(depth) = args.depth {
        config.train.depth = depth;
    }
    if let Some(kind) = args.gate_kind {
        config.train.gate_kind = kind;
    }
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    if let Some(iters) = args.max_iters {
        config.train.max_iters = iters;
    }
    if let Some(samples) = args.samples {
        config.train.cost.n_samples = samples;
    }
    config.validate()?;

    let mut manifest = ManifestBuilder::new("positivize", &config).with_args(cli_args);
    manifest.record_input(&args.state)?;
    let psi_in = read_mps(&args.state)?;

    let resume = match &args.resume {
        None => None,
        Some(path) => {
            manifest.record_input(path)?;
            let file: CheckpointFile = read_json(path)?;
            if file.schema != CHECKPOINT_SCHEMA {
                return Err(CliError::format(
                    path,
                    format!("unsupported checkpoint schema {:?}", file.schema),
                ));
            }
            Some(file.checkpoint)
        }
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let trace_path = args.out_dir.join("trace.jsonl");
    let circuit_path = args.out_dir.join("circuit.json");
    let summary_path = args.out_dir.join("summary.json");
    let checkpoint_path = args.out_dir.join("checkpoint.json");
    let snapshots_path = args.out_dir.join("snapshots.jsonl");

    let mut trace = JsonLines::create(&trace_path, TRACE_SCHEMA)?;
    let mut snapshots = if config.train.snapshot_every > 0 {
        Some(JsonLines::create(&snapshots_path, SNAPSHOTS_SCHEMA)?)
    } else {
        None
    };

    let mut write_error: Option<CliError> = None;
    let mut total_truncation = 0.0;
    let mut max_bond_seen = 0usize;
    let mut observer = |event: TrainEvent<'_>| {
        if write_error.is_some() {
            return;
        }
        let outcome = match event {
            TrainEvent::Iteration(record) => {
                total_truncation += record.truncation;
                max_bond_seen = max_bond_seen.max(record.max_bond);
                trace.push(record)
            }
            TrainEvent::Snapshot(snap) => match &mut snapshots {
                Some(file) => file.push(snap),
                None => Ok(()),
            },
            TrainEvent::Checkpoint(cp) => write_json(
                &checkpoint_path,
                &CheckpointFile {
                    schema: CHECKPOINT_SCHEMA.to_string(),
                    checkpoint: cp.clone(),
                },
            ),
        };
        if let Err(e) = outcome {
            write_error = Some(e);
        }
    };

    let outcome = train_observed(&psi_in, &config.train, resume, &mut observer)?;
    if let Some(e) = write_error {
        return Err(e);
    }

    write_json(
        &checkpoint_path,
        &CheckpointFile {
            schema: CHECKPOINT_SCHEMA.to_string(),
            checkpoint: outcome.final_checkpoint.clone(),
        },
    )?;
    write_circuit(&circuit_path, &outcome.circuit)?;

    let (metrics, final_truncation) =
        final_metrics(&psi_in, &outcome.circuit, &config.train, &config.eval)?;
    let last = outcome.trace.records.last();
    let summary = Summary {
        schema: SUMMARY_SCHEMA.to_string(),
        n_sites: psi_in.n_sites(),
        depth: config.train.depth,
        gate_kind: config.train.gate_kind,
        seed: config.train.seed,
        iterations_run: outcome.trace.records.len(),
        stop_reason: outcome.stop_reason,
        failure: outcome.failure.clone(),
        total_truncation,
        max_bond_seen,
        final_truncation,
        final_effective_cost: last.map(|r| r.effective_cost),
        final_soft_cost: last.map(|r| r.report.soft_cost),
        metrics,
    };
    write_json(&summary_path, &summary)?;

    manifest.record_output(&trace_path);
    manifest.record_output(&circuit_path);
    manifest.record_output(&summary_path);
    manifest.record_output(&checkpoint_path);
    if config.train.snapshot_every > 0 {
        manifest.record_output(&snapshots_path);
    }
    manifest.finish(&args.out_dir.join("manifest.json"))?;

    if outcome.stop_reason == StopReason::NumericFailure {
        return Err(CliError::Numeric(
            outcome
                .failure
                .unwrap_or_else(|| "unspecified numeric failure".to_string()),
        ));
    }
    Ok(summary)
}

// ----------------------------------------------------------------------- eval

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub state: PathBuf,
    pub circuit: PathBuf,
    pub config: Option<PathBuf>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs, cli_args: &[String]) -> Result<Metrics> {
    let mut config = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(samples) = args.samples {
        config.eval.n_samples = samples;
    }
    if let Some(seed) = args.seed {
        config.eval.seed = seed;
    }
    config.validate()?;

    let mut manifest = ManifestBuilder::new("eval", &config).with_args(cli_args);
    manifest.record_input(&args.state)?;
    manifest.record_input(&args.circuit)?;

    let psi_in = read_mps(&args.state)?;
    let circuit = read_circuit(&args.circuit)?;
    if circuit.n_sites != psi_in.n_sites() {
        return Err(CliError::usage(format!(
            "size mismatch: circuit acts on {} sites, state has {}",
            circuit.n_sites,
            psi_in.n_sites()
        )));
    }
    let (metrics, _) = final_metrics(&psi_in, &circuit, &config.train, &config.eval)?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    write_json(&args.out, &metrics)?;
    manifest.record_output(&args.out);
    manifest.finish(&args.out.with_extension("manifest.json"))?;
    Ok(metrics)
}

// ---------------------------------------------------------------------- sweep

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub config: Option<PathBuf>,
    pub jr: Option<String>,
    pub depth: Option<String>,
    pub n: Option<String>,
    pub seeds: Option<String>,
    pub out_dir: PathBuf,
}

/// One sweep result row; failed runs carry a status and message so the
/// sweep keeps going.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub jr: f64,
    pub depth: usize,
    pub n: usize,
    pub seed: u64,
    pub status: String,
    pub iters: Option<usize>,
    pub stop_reason: Option<String>,
    pub final_sign: Option<f64>,
    pub final_imag: Option<f64>,
    pub entropy: Option<f64>,
    pub error: Option<String>,
}

/// Parse one comma-separated grid axis; `None` falls back to the given
/// default. Explicitly empty axes are usage errors.
fn parse_axis<T: std::str::FromStr>(
    name: &str,
    raw: &Option<String>,
    default: T,
) -> Result<Vec<T>> {
    let Some(raw) = raw else {
        return Ok(vec![default]);
    };
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::usage(format!("--{name}: empty grid axis")));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::usage(format!("--{name}: cannot parse {s:?}")))
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs, cli_args: &[String]) -> Result<Vec<SweepRow>> {
    let config = RunConfig::load_or_default(args.config.as_deref())?;
    config.validate()?;

    let jrs = parse_axis("jr", &args.jr, config.model.jr)?;
    let depths = parse_axis("depth", &args.depth, config.train.depth)?;
    let ns = parse_axis("n", &args.n, config.model.n_sites)?;
    let seeds = parse_axis("seeds", &args.seeds, config.train.seed)?;

    let total = jrs.len() * depths.len() * ns.len() * seeds.len();
    if total == 0 {
        return Err(CliError::usage("sweep grid is empty"));
    }
    if total > config.sweep.max_runs {
        return Err(CliError::usage(format!(
            "sweep grid has {total} runs, above sweep.max_runs = {}",
            config.sweep.max_runs
        )));
    }

    let mut manifest = ManifestBuilder::new("sweep", &config).with_args(cli_args);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let csv_path = args.out_dir.join("sweep.csv");
    let mut file = std::fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    writeln!(file, "# {SWEEP_SCHEMA}").map_err(|e| CliError::io(&csv_path, e))?;
    let mut csv = csv::Writer::from_writer(file);

    // Ground states are reused across depth/seed rows of the same model.
    let mut gs_cache: HashMap<(usize, u64), MatrixProductState> = HashMap::new();
    let mut rows = Vec::with_capacity(total);
    let mut done = 0usize;
    for &n in &ns {
        for &jr in &jrs {
            for &depth in &depths {
                for &seed in &seeds {
                    done += 1;
                    eprintln!(
                        "sweep {done}/{total}: n={n} jr={jr} depth={depth} seed={seed}"
                    );
                    let row = sweep_run(&config, &mut gs_cache, n, jr, depth, seed);
                    csv.serialize(&row)
                        .and_then(|_| csv.flush().map_err(csv::Error::from))
                        .map_err(|e| CliError::format(&csv_path, e.to_string()))?;
                    rows.push(row);
                }
            }
        }
    }

    manifest.record_output(&csv_path);
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    Ok(rows)
}

fn sweep_run(
    config: &RunConfig,
    gs_cache: &mut HashMap<(usize, u64), MatrixProductState>,
    n: usize,
    jr: f64,
    depth: usize,
    seed: u64,
) -> SweepRow {
    let mut row = SweepRow {
        jr,
        depth,
        n,
        seed,
        status: "ok".to_string(),
        iters: None,
        stop_reason: None,
        final_sign: None,
        final_imag: None,
        entropy: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let model = LadderModel::new(n, config.model.j1, config.model.j2, jr)?;
        let key = (n, jr.to_bits());
        let psi_in = match gs_cache.get(&key) {
            Some(psi) => psi.clone(),
            None => {
                let (psi, _, _) = prepare_ground_state(
                    &model,
                    config.groundstate.cutoff,
                    config.groundstate.max_bond,
                )?;
                gs_cache.insert(key, psi.clone());
                psi
            }
        };
        let mut train = config.train.clone();
        train.depth = depth;
        train.seed = seed;
        let outcome = train_observed(&psi_in, &train, None, &mut |_| {})?;
        let (metrics, _) = final_metrics(&psi_in, &outcome.circuit, &train, &config.eval)?;
        row.iters = Some(outcome.trace.records.len());
        row.stop_reason = Some(
            serde_json::to_value(outcome.stop_reason)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        );
        row.final_sign = Some(metrics.hard_avg_sign);
        row.final_imag = Some(metrics.imag_residual);
        row.entropy = Some(metrics.entropy);
        if outcome.stop_reason == StopReason::NumericFailure {
            return Err(CliError::Numeric(
                outcome.failure.unwrap_or_else(|| "numeric failure".to_string()),
            ));
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = "error".to_string();
        row.error = Some(e.to_string());
    }
    row
}

/// Read back a sweep CSV (skipping the version comment line).
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let Some((header, _)) = text.split_once('\n') else {
        return Err(CliError::format(path, "empty sweep file"));
    };
    if header.trim() != format!("# {SWEEP_SCHEMA}") {
        return Err(CliError::format(
            path,
            format!("unsupported sweep header {header:?}"),
        ));
    }
    let body = &text[header.len() + 1..];
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::format(path, e.to_string())))
        .collect()
}
