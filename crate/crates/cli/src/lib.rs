//! Command-line companion to `positivize-core`: prepares ground
//! states, trains positivization circuits, evaluates sign metrics,
//! and sweeps parameter grids into plot-ready CSV.
//!
//! All run logic lives in this library so integration tests can drive
//! it in-process; the `positivize` binary is a thin argument parser on
//! top. Every command resolves a [`config::RunConfig`] (defaults,
//! config file, flag overrides, in that order), writes versioned
//! artifacts, and records a [`manifest::RunManifest`] checksumming
//! them. Rerunning a command with the same config and seed reproduces
//! every numeric output byte for byte.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod metrics;

pub use commands::{
    cmd_eval, cmd_groundstate, cmd_positivize, cmd_sweep, EvalArgs, GroundstateArgs,
    PositivizeArgs, Summary, SweepArgs, SweepRow,
};
pub use config::RunConfig;
pub use error::{CliError, Result};
pub use manifest::{verify_manifest, RunManifest};
pub use metrics::Metrics;
