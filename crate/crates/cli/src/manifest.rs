use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{io_error, CliResult};

/// Everything needed to reproduce a command's outputs. Contains no
/// timestamps or absolute output locations, so reruns compare equal.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub params: Value,
    pub rng: Option<&'static str>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, params: Value) -> Self {
        RunManifest { command, params, rng: None, seed: None, version: env!("CARGO_PKG_VERSION"), outputs: Vec::new() }
    }

    pub fn write(&self, path: &Path) -> CliResult {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| io_error(path, e))
    }
}

/// Sidecar manifest path for a single output file: `<file>.manifest.json`.
pub fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
