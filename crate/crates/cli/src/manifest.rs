//! Run manifests: a deterministic record of what produced each output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce a run: the command line, the effective
/// config, seeds, tool versions, input digests, and the produced files.
/// Manifests contain no timestamps, so identical invocations yield identical
/// manifests and identical outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    /// Input path to sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: String, config: serde_json::Value, seeds: Vec<u64>) -> RunManifest {
        let mut versions = BTreeMap::new();
        versions.insert("qas-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("qas-core".into(), qas_core::VERSION.into());
        RunManifest {
            command,
            config,
            seeds,
            versions,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("cannot read input file {}", path.display()))?;
        let digest = hex_digest(&bytes);
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reconstruct the command line the way it was typed, for the manifest.
pub fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}
