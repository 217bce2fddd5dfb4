//! Reproducibility manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Facts about one execution that do not affect its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub started_unix: f64,
    pub duration_s: f64,
    pub workers: usize,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Fully resolved configuration, defaults expanded.
    pub config: BTreeMap<String, String>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub summary: serde_json::Value,
    pub run: RunInfo,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Equal in everything but the execution facts.
    pub fn same_run(&self, other: &RunManifest) -> bool {
        self.tool == other.tool
            && self.version == other.version
            && self.command == other.command
            && self.config == other.config
            && self.artifacts == other.artifacts
            && self.summary == other.summary
    }
}
