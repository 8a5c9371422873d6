//! Run records: one JSON line per run appended to `runs.jsonl` in the
//! output directory. Replaying the recorded (command, params, seed)
//! reproduces the output payload bit-for-bit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use sepmin::error::{Error, Result};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub wall_ms: u64,
    pub oracle_calls: u64,
    pub status: String,
    pub output: serde_json::Value,
}

impl RunRecord {
    pub fn new(command: &str, params: BTreeMap<String, String>, seed: u64) -> RunRecord {
        RunRecord {
            command: command.to_string(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_ms: 0,
            oracle_calls: 0,
            status: "ok".to_string(),
            output: serde_json::Value::Null,
        }
    }

    pub fn append_to(&self, out_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| Error::Input(format!("output dir {}: {e}", out_dir.display())))?;
        let path = out_dir.join("runs.jsonl");
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let line = serde_json::to_string(self).expect("record serializes");
        writeln!(f, "{line}").map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
