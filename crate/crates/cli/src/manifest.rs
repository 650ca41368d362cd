use std::path::Path;

use anyhow::{Context, Result};
use mblw_core::{Method, StreamId};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::table::write_atomic;

/// Bumped whenever an output file changes shape.
pub const ARTIFACT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const FRAGMENT_DIR: &str = "fragments";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub h: f64,
    pub realization: u32,
    pub disorder_stream: StreamId,
    /// Trajectory `k` of this realization uses this stream with trajectory index `k`.
    pub trajectory_stream: Option<StreamId>,
    pub fields: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub h: f64,
    pub realization: u32,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
    /// Summed over realizations, so larger than wall time when parallel.
    pub ed_seconds: f64,
    pub dtwa_seconds: f64,
    pub output_seconds: f64,
    /// Realizations loaded from an earlier, interrupted run.
    pub resumed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub tool_version: String,
    pub status: RunStatus,
    pub config: RunConfig,
    pub realizations: Vec<RealizationRecord>,
    pub failures: Vec<FailureRecord>,
    pub timings: Timings,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}
