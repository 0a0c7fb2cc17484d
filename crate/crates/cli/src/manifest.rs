//! Reproducibility record written next to every command's outputs.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenarios: Vec<String>,
    pub strategies: Vec<String>,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub speed_fractions: Vec<f64>,
    pub output_dir: String,
    pub engine_version: String,
    /// SHA-256 over the engine version and every scenario and parameter set
    /// the run read.
    pub engine_hash: String,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path, inputs: &[String]) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let mut h = Sha256::new();
        h.update(version.as_bytes());
        for i in inputs {
            h.update((i.len() as u64).to_le_bytes());
            h.update(i.as_bytes());
        }
        let engine_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            command: command.into(),
            scenarios: Vec::new(),
            strategies: Vec::new(),
            repetitions: 0,
            seeds: Vec::new(),
            speed_fractions: Vec::new(),
            output_dir: output_dir.display().to_string(),
            engine_version: version,
            engine_hash,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let file = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&file, text).map_err(io_err(format!("writing {}", file.display())))
    }
}
