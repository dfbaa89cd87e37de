//! Experiment records. The record file holds only reproducible content;
//! timestamps and the source revision go to a `.meta.json` sidecar.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use dilates_core::digest::sha256_hex;
use serde::Serialize;
use serde_json::Value;

use crate::cache::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Construct,
    Verify,
    Search,
    Sweep,
    Gap,
    Pipeline,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub kind: Kind,
    pub tool_version: &'static str,
    /// Canonical encoding of the command inputs.
    pub inputs: String,
    pub inputs_digest: String,
    pub outputs: Value,
}

impl ExperimentRecord {
    pub fn new(kind: Kind, inputs: String, outputs: Value) -> Self {
        ExperimentRecord {
            kind,
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs_digest: sha256_hex(&inputs),
            inputs,
            outputs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub git_describe: String,
    pub threads: usize,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `<dir>/<stem>.json` and its sidecar `<dir>/<stem>.meta.json`.
pub fn write_record(dir: &Path, stem: &str, record: &ExperimentRecord, started_unix_ms: u128) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    write_atomic(&path, &to_json_bytes(record)?)?;
    let sidecar = Sidecar {
        started_unix_ms,
        finished_unix_ms: now_ms(),
        git_describe: git_describe(),
        threads: rayon::current_num_threads(),
    };
    write_atomic(&dir.join(format!("{stem}.meta.json")), &to_json_bytes(&sidecar)?)?;
    Ok(path)
}
