//! Run manifests: what produced a set of artifacts, and their digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, name: impl Into<String>) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(FileDigest {
            path: name.into(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIdentity {
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub command: String,
    pub seed: u64,
    /// TOML snapshot of the resolved configuration.
    pub config: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
}

impl RunIdentity {
    pub fn new(command: &str, seed: u64, config: String) -> Self {
        RunIdentity {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: speller_core::VERSION.into(),
            command: command.into(),
            seed,
            config,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(FileDigest::of(path, path.display().to_string())?);
        Ok(self)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("identity serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub digest: String,
    pub identity: RunIdentity,
    /// Artifacts relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(identity: RunIdentity) -> Self {
        RunManifest {
            digest: identity.digest(),
            identity,
            outputs: Vec::new(),
        }
    }

    /// Records an artifact already written to `dir/name`.
    pub fn output(&mut self, dir: &Path, name: &str) -> Result<()> {
        self.outputs.push(FileDigest::of(&dir.join(name), name)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Re-hashes identity and outputs against what is on disk.
    pub fn verify(&self, dir: &Path) -> Result<bool> {
        if self.identity.digest() != self.digest {
            return Ok(false);
        }
        for o in &self.outputs {
            if FileDigest::of(&dir.join(&o.path), o.path.clone())? != *o {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
