//! Run manifests: the provenance record every command leaves behind.
//!
//! A manifest snapshots the resolved configuration, checksums of the
//! inputs and of every output file, the code version, and wall-clock
//! timestamps. Re-running the command with the manifest's config and
//! seed reproduces all numeric outputs bit-exactly; only the
//! timestamps differ.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{file_sha256, write_json};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_SCHEMA: &str = "manifest_v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the manifest's directory (or as given if outside).
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    /// Invocation as typed, so grid flags and paths are preserved.
    pub cli_args: Vec<String>,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: String,
    /// Resolved configuration after flag overrides.
    pub config: RunConfig,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

/// Collects inputs/outputs during a run and writes the manifest last,
/// checksumming the final on-disk bytes of every listed file.
pub struct ManifestBuilder {
    command: String,
    cli_args: Vec<String>,
    started_at: chrono::DateTime<chrono::Utc>,
    config: RunConfig,
    inputs: Vec<FileRecord>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            cli_args: Vec::new(),
            started_at: chrono::Utc::now(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: &[String]) -> Self {
        self.cli_args = args.to_vec();
        self
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord {
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Checksum all recorded outputs and write `manifest_path`.
    pub fn finish(self, manifest_path: &Path) -> Result<()> {
        let base = manifest_path.parent().unwrap_or(Path::new(""));
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for path in &self.outputs {
            let rel = path.strip_prefix(base).unwrap_or(path);
            outputs.push(FileRecord {
                path: rel.display().to_string(),
                sha256: file_sha256(path)?,
            });
        }
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            command: self.command,
            cli_args: self.cli_args,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            config: self.config,
            inputs: self.inputs,
            outputs,
        };
        write_json(manifest_path, &manifest)
    }
}

/// Re-checksum every output listed in a manifest; errors on the first
/// missing or modified file. Used by tests and available for doctors.
pub fn verify_manifest(manifest_path: &Path) -> Result<RunManifest> {
    let manifest: RunManifest = crate::formats::read_json(manifest_path)?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(CliError::format(
            manifest_path,
            format!("unsupported manifest schema {:?}", manifest.schema),
        ));
    }
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    for record in &manifest.outputs {
        let path = base.join(&record.path);
        let actual = file_sha256(&path)?;
        if actual != record.sha256 {
            return Err(CliError::format(
                &path,
                format!(
                    "checksum mismatch: manifest {} vs file {}",
                    record.sha256, actual
                ),
            ));
        }
    }
    Ok(manifest)
}
