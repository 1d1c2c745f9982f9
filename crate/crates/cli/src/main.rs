//! `positivize`: train local unitary circuits that map a wavefunction
//! to real nonnegative amplitudes, and inspect the results.

use clap::{Parser, Subcommand, ValueEnum};
use positivize_cli::commands::{
    cmd_eval, cmd_groundstate, cmd_positivize, cmd_sweep, EvalArgs, GroundstateArgs,
    PositivizeArgs, SweepArgs,
};
use positivize_cli::config::RunConfig;
use positivize_cli::error::Result;
use positivize_core::GateKind;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "positivize",
    version,
    about = "Optimize local unitary circuits that remove wavefunction sign structure",
    after_help = "Exit codes: 0 success, 1 runtime failure, 2 usage/config error, \
                  3 numeric abort (partial artifacts kept)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GateKindArg {
    /// Single-site z rotations.
    Rz,
    /// Full two-qubit unitaries from a parametrized Hermitian generator.
    General,
}

impl From<GateKindArg> for GateKind {
    fn from(value: GateKindArg) -> Self {
        match value {
            GateKindArg::Rz => GateKind::Rz,
            GateKindArg::General => GateKind::GeneralTwoQubit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the spin model and write its ground state as an MPS file.
    Groundstate {
        /// Config file (TOML); flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of sites (even, at most 20).
        #[arg(long)]
        n: Option<usize>,
        /// Nearest-neighbor exchange coupling.
        #[arg(long)]
        j1: Option<f64>,
        /// Next-nearest-neighbor exchange coupling.
        #[arg(long)]
        j2: Option<f64>,
        /// Four-site ring-exchange coupling.
        #[arg(long)]
        jr: Option<f64>,
        /// Output MPS path; metadata and manifest land next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a brick-wall circuit to positivize a stored state.
    Positivize {
        /// Input MPS file.
        #[arg(long)]
        state: PathBuf,
        /// Config file (TOML); flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Brick-wall depth (number of layers).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum)]
        gate_kind: Option<GateKindArg>,
        /// Base seed for initialization and per-iteration sampling.
        #[arg(long)]
        seed: Option<u64>,
        /// Iteration budget.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Samples per iteration.
        #[arg(long)]
        samples: Option<usize>,
        /// Resume from a checkpoint.json written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Directory for trace.jsonl, circuit.json, summary.json,
        /// checkpoint.json, and manifest.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Apply a stored circuit to a stored state and report metrics.
    Eval {
        /// Input MPS file.
        #[arg(long)]
        state: PathBuf,
        /// Circuit file written by `positivize`.
        #[arg(long)]
        circuit: PathBuf,
        /// Config file (TOML); flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sample count when the state is too large to enumerate.
        #[arg(long)]
        samples: Option<usize>,
        /// Sampling seed for the same case.
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics output path.
        #[arg(long, default_value = "metrics.json")]
        out: PathBuf,
    },
    /// Train over a grid of ring couplings, depths, sizes, and seeds.
    Sweep {
        /// Config file (TOML) providing the per-run settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated ring couplings, e.g. `0.25,0.75`.
        #[arg(long)]
        jr: Option<String>,
        /// Comma-separated depths, e.g. `1,2,3`.
        #[arg(long)]
        depth: Option<String>,
        /// Comma-separated site counts.
        #[arg(long)]
        n: Option<String>,
        /// Comma-separated seeds; each grid point runs once per seed.
        #[arg(long)]
        seeds: Option<String>,
        /// Directory for sweep.csv and manifest.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the full configuration (defaults, or a file re-dumped).
    PrintConfig {
        /// Config file to re-dump; omitted prints the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Groundstate {
            config,
            n,
            j1,
            j2,
            jr,
            out,
        } => {
            let meta = cmd_groundstate(
                &GroundstateArgs {
                    config,
                    n,
                    j1,
                    j2,
                    jr,
                    out: out.clone(),
                },
                argv,
            )?;
            println!(
                "ground state: n={} energy={:.12} gap={:.3e} residual={:.3e} -> {}",
                meta.model.n_sites,
                meta.energy,
                meta.degeneracy_gap,
                meta.residual,
                out.display()
            );
        }
        Command::Positivize {
            state,
            config,
            depth,
            gate_kind,
            seed,
            max_iters,
            samples,
            resume,
            out_dir,
        } => {
            let summary = cmd_positivize(
                &PositivizeArgs {
                    state,
                    config,
                    depth,
                    gate_kind: gate_kind.map(GateKind::from),
                    seed,
                    max_iters,
                    samples,
                    resume,
                    out_dir: out_dir.clone(),
                },
                argv,
            )?;
            println!(
                "positivize: {} iterations, stop={:?}, sign={:.6}, imag={:.3e} -> {}",
                summary.iterations_run,
                summary.stop_reason,
                summary.metrics.hard_avg_sign,
                summary.metrics.imag_residual,
                out_dir.display()
            );
        }
        Command::Eval {
            state,
            circuit,
            config,
            samples,
            seed,
            out,
        } => {
            let metrics = cmd_eval(
                &EvalArgs {
                    state,
                    circuit,
                    config,
                    samples,
                    seed,
                    out,
                },
                argv,
            )?;
            let text = serde_json::to_string_pretty(&metrics)
                .expect("metrics serialize");
            println!("{text}");
        }
        Command::Sweep {
            config,
            jr,
            depth,
            n,
            seeds,
            out_dir,
        } => {
            let rows = cmd_sweep(
                &SweepArgs {
                    config,
                    jr,
                    depth,
                    n,
                    seeds,
                    out_dir: out_dir.clone(),
                },
                argv,
            )?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "sweep: {} runs, {} failed -> {}",
                rows.len(),
                failed,
                out_dir.join("sweep.csv").display()
            );
        }
        Command::PrintConfig { config } => {
            let resolved = RunConfig::load_or_default(config.as_deref())?;
            print!("{}", resolved.to_toml());
        }
    }
    Ok(())
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Err(err) = run(cli, &argv) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
