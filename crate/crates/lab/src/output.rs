//! Writes an experiment's files and its run manifest to disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::experiments::ExperimentOutcome;

pub const MANIFEST: &str = "manifest.json";

/// Provenance record written next to every run. It holds the wall time, so it
/// is the one output file that differs between otherwise identical runs.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub config_hash: String,
    pub version: &'static str,
    pub seed: u64,
    pub canonical_config: String,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, wall: Duration) -> Self {
        Self {
            experiment: cfg.kind.name(),
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            canonical_config: cfg.canonical(),
            wall_time_seconds: wall.as_secs_f64(),
            passed: outcome.passed,
            files: outcome.files.iter().map(|f| f.name.clone()).collect(),
        }
    }
}

/// Default directory for a run: `<root>/<experiment>-<first 12 hash chars>`.
pub fn run_dir(root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    root.join(format!("{}-{}", cfg.kind.name(), &cfg.hash()[..12]))
}

pub fn write_outcome(
    dir: &Path,
    outcome: &ExperimentOutcome,
    manifest: &Manifest,
) -> Result<(), LabError> {
    for f in &outcome.files {
        let path = dir.join(&f.name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
        }
        fs::write(&path, &f.contents).map_err(|e| LabError::io(&path, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| LabError::io(&path, e))
}
