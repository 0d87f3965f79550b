use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn hash(path: &Path, display: String) -> Result<FileEntry> {
        let data = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(FileEntry {
            path: display,
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<FileEntry>,
    pub config: serde_json::Value,
    pub duration_seconds: f64,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileEntry>,
}

/// Collects inputs and outputs of one run and writes the manifest last.
pub struct ManifestBuilder {
    command: String,
    started: Instant,
    inputs: Vec<FileEntry>,
    outputs: Vec<PathBuf>,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(command: &str, out_dir: &Path) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_owned(),
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_owned(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .push(FileEntry::hash(path, path.display().to_string())?);
        Ok(())
    }

    /// Path for an output file inside the run directory, recorded for hashing.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(PathBuf::from(name));
        self.out_dir.join(name)
    }

    pub fn finish(self, config: serde_json::Value) -> Result<PathBuf> {
        let outputs = self
            .outputs
            .iter()
            .map(|rel| FileEntry::hash(&self.out_dir.join(rel), rel.display().to_string()))
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: self.command,
            inputs: self.inputs,
            config,
            duration_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        let path = self.out_dir.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
