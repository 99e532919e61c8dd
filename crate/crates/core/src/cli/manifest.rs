use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// What a command ran with and what it wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub base_seed: Option<u64>,
    pub engine: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            base_seed: None,
            engine: None,
            started_unix: unix_now(),
            finished_unix: 0,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, name: &str, contents: &[u8]) {
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        });
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("cannot serialise manifest: {e}")))
    }
}

/// Writes files into one directory and records each in a manifest.
pub struct OutputDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: RunManifest) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.manifest.record(name, contents.as_bytes());
        Ok(path)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.finished_unix = unix_now();
        let path = self.root.join(MANIFEST_FILE);
        let text = self.manifest.to_toml()?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
