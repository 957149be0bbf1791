//! Per-directory run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{read_toml, write_toml};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    /// Command-specific settings that are not part of the config.
    pub options: BTreeMap<String, String>,
    pub config: RunConfig,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: config.numerics.seed,
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            artifacts: Vec::new(),
            options: BTreeMap::new(),
            config: config.clone(),
        }
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.options.insert(key.to_owned(), value.to_string());
    }

    pub fn artifact(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_owned());
        }
    }

    /// Stamps the finish time and replaces any manifest already in `dir`.
    pub fn finish(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.finished_unix_s = unix_now();
        let path = dir.join(MANIFEST_FILE);
        write_toml(&path, &self)?;
        Ok(path)
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        read_toml(&dir.join(MANIFEST_FILE))
    }
}
