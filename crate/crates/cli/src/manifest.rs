use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Provenance record written next to every command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: u64,
    pub outputs: Vec<PathBuf>,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            config: serde_json::to_value(cfg).expect("config serializes"),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            threads: rayon::current_num_threads(),
            started_at: now(),
            finished_at: 0,
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Stamps the finish time and writes `<command>.manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_at = now();
        let path = dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
