//! Run configuration: a TOML file that pins every knob of a run.
//!
//! The optimization literature this tool implements leaves several
//! hyperparameters implicit (learning rate, sign sharpness, entropy
//! weight, iteration budgets). Rather than hiding defaults in code they
//! are all part of one config struct whose full default dump is exposed
//! through `print-config`, so every run can be reproduced from its
//! manifest alone. Command-line flags override individual fields after
//! the file is loaded.

use crate::error::{CliError, Result};
use positivize_core::model::LadderModel;
use positivize_core::optim::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_SCHEMA: &str = "config_v1";

/// Model couplings; mirrors the Hamiltonian constructor arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_sites: usize,
    pub j1: f64,
    pub j2: f64,
    pub jr: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            n_sites: 8,
            j1: 1.0,
            j2: 0.0,
            jr: 0.0,
        }
    }
}

impl ModelSection {
    pub fn to_model(&self) -> Result<LadderModel> {
        Ok(LadderModel::new(self.n_sites, self.j1, self.j2, self.jr)?)
    }
}

/// Compression settings used when the dense ground state is turned into
/// an MPS file. The cutoff is far below the circuit-application cutoff;
/// the stored state should be exact for all practical purposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundstateSection {
    pub cutoff: f64,
    pub max_bond: usize,
}

impl Default for GroundstateSection {
    fn default() -> Self {
        GroundstateSection {
            cutoff: 1e-12,
            max_bond: 1024,
        }
    }
}

/// Sweep safety limits. Grids are given on the command line; this caps
/// the total number of runs a single sweep may attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub max_runs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { max_runs: 64 }
    }
}

/// Settings for metric evaluation on states too large to enumerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            n_samples: 100_000,
            seed: 7,
        }
    }
}

/// Everything a run needs, in one versioned document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelSection,
    pub groundstate: GroundstateSection,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA.to_string(),
            model: ModelSection::default(),
            groundstate: GroundstateSection::default(),
            train: TrainConfig::default(),
            sweep: SweepSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if config.schema != CONFIG_SCHEMA {
            return Err(CliError::usage(format!(
                "{}: unsupported config schema {:?} (expected {CONFIG_SCHEMA:?})",
                path.display(),
                config.schema
            )));
        }
        config.validate()?;
        Ok(config)
    }

    /// Load the file if given, otherwise start from defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.to_model()?;
        self.train.validate()?;
        if self.groundstate.max_bond == 0 {
            return Err(CliError::usage("groundstate.max_bond must be >= 1"));
        }
        if !(self.groundstate.cutoff >= 0.0 && self.groundstate.cutoff.is_finite()) {
            return Err(CliError::usage("groundstate.cutoff must be finite and >= 0"));
        }
        if self.sweep.max_runs == 0 {
            return Err(CliError::usage("sweep.max_runs must be >= 1"));
        }
        if self.eval.n_samples == 0 {
            return Err(CliError::usage("eval.n_samples must be >= 1"));
        }
        Ok(())
    }

    /// Full TOML dump; parsing it back yields an identical config.
    pub fn to_toml(&self) -> String {
        let body = toml::to_string_pretty(self).expect("config serializes");
        format!(
            "# Run configuration ({CONFIG_SCHEMA}). Every hyperparameter of a run\n\
             # lives here; command-line flags override individual fields.\n{body}"
        )
    }
}
