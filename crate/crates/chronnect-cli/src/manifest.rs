//! Run manifests: every command records what it did next to its outputs.
//!
//! A manifest is written at the end of a run, after the outputs it lists,
//! so a manifest on disk implies those outputs were produced by the
//! recorded configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// What a command ran with: the subcommand name, every relevant flag as the
/// exact string the caller supplied (or its default), content hashes of the
/// inputs, the outputs it wrote (relative to the manifest), and the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: BTreeMap<String, String>,
    pub input_hashes: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config_echo: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            output_paths: Vec::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Into<String>) {
        self.config_echo.insert(key.to_string(), value.into());
    }

    pub fn record_output(&mut self, rel_path: impl Into<String>) {
        self.output_paths.push(rel_path.into());
    }

    pub fn hash_input(&mut self, label: &str, path: &Path) -> Result<(), Failure> {
        let digest = sha256_file(path)?;
        self.input_hashes.insert(label.to_string(), digest);
        Ok(())
    }

    /// Writes `run_manifest.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, Failure> {
        let path = dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(self).map_err(chronnect::Error::from)?;
        bytes.push(b'\n');
        chronnect::chronnectome::write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_bytes(&bytes))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}
