//! Persisted results: one JSON document per run, deterministic up to the
//! wall-clock field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sphere_mcmc::diagnostics::DiagnosticsReport;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRunReport {
    pub kernel: String,
    pub dimension: usize,
    pub seed: u64,
    pub tuned_parameter: Option<f64>,
    pub tuner_converged: Option<bool>,
    pub tuner_warning: Option<String>,
    pub diagnostics: DiagnosticsReport,
    /// relative path of the raw-trace array file, when stored
    pub trace_file: Option<String>,
}

impl KernelRunReport {
    pub fn key(&self) -> String {
        run_key(&self.kernel, self.dimension, self.seed)
    }
}

pub fn run_key(kernel: &str, dimension: usize, seed: u64) -> String {
    format!("{kernel}/d{dimension:04}/seed{seed:04}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub library_version: String,
    /// excluded from determinism comparisons
    pub wall_clock_seconds: f64,
    pub runs: BTreeMap<String, KernelRunReport>,
}

impl RunResult {
    pub fn new(config: ExperimentConfig, runs: Vec<KernelRunReport>) -> Self {
        Self {
            config,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            runs: runs.into_iter().map(|r| (r.key(), r)).collect(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Runtime(format!("cannot read {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// JSON with the wall clock zeroed, for byte-level determinism checks.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        serde_json::to_string_pretty(&copy).expect("serializable")
    }
}
