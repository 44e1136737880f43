//! Run manifests: what was run, with which inputs, and what it cost.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::gateway::LedgerTotals;
use crate::model::Strategy;
use crate::store::{atomic_write, StoreError};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    /// Flags as given on the command line.
    pub flags: BTreeMap<String, String>,
    /// Fully resolved configuration.
    pub config: BTreeMap<String, String>,
    pub config_digest: String,
    pub corpus_checksum: Option<String>,
    pub provider_ids: BTreeMap<String, String>,
    pub seed: u64,
    /// Strategy after folding in the variant, for optimization runs.
    pub strategy: Option<Strategy>,
    /// Items processed successfully.
    pub items: u64,
    pub failed_items: u64,
    /// sha-256 of each output file, keyed by role.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    pub ledger: LedgerTotals,
}

/// Digest of a resolved configuration, independent of insertion order.
pub fn config_digest(config: &BTreeMap<String, String>) -> String {
    let mut text = String::new();
    for (k, v) in config {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

/// Where the manifest of `command` writing `output` lives.
pub fn manifest_path(output: &Path, command: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{command}.manifest.json"));
    output.with_file_name(name)
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: BTreeMap<String, String>, seed: u64) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            command: command.into(),
            flags: BTreeMap::new(),
            config_digest: config_digest(&config),
            config,
            corpus_checksum: None,
            provider_ids: BTreeMap::new(),
            seed,
            strategy: None,
            items: 0,
            failed_items: 0,
            outputs: BTreeMap::new(),
            started_at: String::new(),
            finished_at: String::new(),
            ledger: LedgerTotals::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write(&self, path: &Path) -> Result<(), StoreError> {
        atomic_write(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StoreError::FileNotFound(path.display().to_string()),
            _ => StoreError::Io(e),
        })?;
        Self::from_json(&text).map_err(|e| StoreError::FormatError {
            location: path.display().to_string(),
            cause: e.to_string(),
        })
    }

    /// Copy with both timestamps cleared, for reproducibility checks.
    pub fn without_timestamps(&self) -> Self {
        Self {
            started_at: String::new(),
            finished_at: String::new(),
            ..self.clone()
        }
    }
}
