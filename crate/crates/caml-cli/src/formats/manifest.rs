//! Run manifests: the command, its resolved configuration, the seed, input
//! file fingerprints, output paths, and wall time: enough to reproduce
//! the run. Written atomically at command completion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
    pub wall_time_seconds: f64,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: serde_json::Value,
    input_hashes: BTreeMap<String, String>,
    output_paths: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            config: serde_json::Value::Null,
            input_hashes: BTreeMap::new(),
            output_paths: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, value: serde_json::Value) -> &mut Self {
        self.config = value;
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.input_hashes
            .insert(path.display().to_string(), super::file_hash(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: PathBuf) -> &mut Self {
        self.output_paths.push(path.display().to_string());
        self
    }

    /// Finalizes and writes `manifest.json` into `dir`.
    pub fn write(self, dir: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            seed: self.seed,
            config: self.config,
            input_hashes: self.input_hashes,
            output_paths: self.output_paths,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        super::write_atomic(
            &dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }
}
