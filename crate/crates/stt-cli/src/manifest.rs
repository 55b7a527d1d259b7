//! Run manifests: every command that writes outputs records what it ran
//! with, so a run can be reproduced from the manifest alone.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub input_paths: Vec<PathBuf>,
    pub output_paths: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        let now = Utc::now();
        RunManifest {
            command: command.to_string(),
            config_path: None,
            input_paths: Vec::new(),
            output_paths: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: now,
            finished: now,
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.input_paths.push(path.as_ref().to_path_buf());
        self
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.output_paths.push(path.as_ref().to_path_buf());
        self
    }

    /// Writes `<primary output>.manifest.json` next to the first output.
    pub fn finish(mut self) -> std::io::Result<()> {
        self.finished = Utc::now();
        let Some(primary) = self.output_paths.first().cloned() else {
            return Ok(());
        };
        let mut path = primary.into_os_string();
        path.push(".manifest.json");
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text)
    }
}
