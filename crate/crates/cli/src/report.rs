use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub tol_profile: String,
    pub inputs: Vec<InputDigest>,
    pub verdicts: serde_json::Value,
    /// Stage → milliseconds. Empty unless `--timings` was given, so that
    /// reports stay byte-identical across runs.
    pub timings: BTreeMap<String, u128>,
}

/// Collects inputs and stage timings for one command.
pub struct Recorder {
    pub inputs: Vec<InputDigest>,
    timings: BTreeMap<String, u128>,
    keep_timings: bool,
}

impl Recorder {
    pub fn new(keep_timings: bool) -> Self {
        Self { inputs: Vec::new(), timings: BTreeMap::new(), keep_timings }
    }

    pub fn read(&mut self, path: &Path) -> anyhow::Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(bytes)
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(name.to_string(), t.elapsed().as_millis());
        out
    }

    pub fn timings(&self) -> &BTreeMap<String, u128> {
        &self.timings
    }

    pub fn finish(self, command: &str, seed: u64, tol_profile: &str, verdicts: serde_json::Value) -> RunReport {
        RunReport {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tol_profile: tol_profile.to_string(),
            inputs: self.inputs,
            verdicts,
            timings: if self.keep_timings { self.timings } else { BTreeMap::new() },
        }
    }
}

pub fn write_json(path: &PathBuf, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
