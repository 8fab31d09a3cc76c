use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{Map, Value};

/// Record of one invocation, written next to its primary output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
    pub config: Map<String, Value>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub exit_status: Option<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            config: Map::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: None,
            exit_status: None,
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.config
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// `<first output>.manifest.json` unless overridden.
    pub fn default_path(&self) -> Option<PathBuf> {
        self.outputs.first().map(|p| {
            let mut name = p.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        })
    }

    /// Writes to `path`, the default path, or stderr when neither exists.
    pub fn finish(mut self, status: &str, path: Option<&Path>) -> Result<()> {
        self.finished_at = Some(now());
        self.exit_status = Some(status.to_string());
        let target = path.map(Path::to_path_buf).or_else(|| self.default_path());
        match target {
            Some(p) => {
                let text = serde_json::to_string_pretty(&self)?;
                std::fs::write(&p, text + "\n").with_context(|| format!("writing manifest {}", p.display()))
            }
            None => {
                eprintln!("manifest: {}", serde_json::to_string(&self)?);
                Ok(())
            }
        }
    }
}
