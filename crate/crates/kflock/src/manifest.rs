use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::format::write_atomic;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Summary of one run, written once at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub started_at: String,
    pub wall_seconds: f64,
    pub threads: usize,
    /// File names relative to the run directory, in write order.
    pub outputs: Vec<String>,
    pub checks: BTreeMap<String, bool>,
    pub metrics: BTreeMap<String, f64>,
    /// `"ok"`, or the reason the run stopped.
    pub status: String,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        text.push(b'\n');
        write_atomic(&dir.join(MANIFEST_NAME), &text)
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = std::fs::read(dir.join(MANIFEST_NAME))?;
        serde_json::from_slice(&text).map_err(std::io::Error::other)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.values().all(|ok| *ok)
    }
}
