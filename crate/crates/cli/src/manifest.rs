//! Record of one `run`: what went in, what came out, how long it took.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;
use crate::io::{file_sha256, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    /// Workspace tree hash before the first step.
    pub repo_fingerprint: String,
    /// SHA-256 of the granular plan file and the high-level plan hash it
    /// was derived from.
    pub plan_hashes: BTreeMap<String, String>,
    pub fixture_hashes: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: Config,
    pub inputs: Inputs,
    pub artifacts: Vec<Artifact>,
    /// Wall-clock milliseconds per stage. Not reproducible.
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(config: Config, inputs: Inputs) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            artifacts: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Hashes `dir/name` and records it.
    pub fn add_artifact(&mut self, dir: &Path, name: &str) -> Result<(), CliError> {
        let sha256 = file_sha256(&dir.join(name))?;
        self.artifacts.push(Artifact { path: name.to_string(), sha256 });
        Ok(())
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == name)
    }

    /// Written last and atomically, so a manifest on disk always describes
    /// a finished run.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}
