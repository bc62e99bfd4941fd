//! Run manifests: config hash, code version, timings and verdicts. A rerun
//! with the same config and version reproduces all outputs bit-exactly
//! (seeded streams, order-independent reductions).

use crate::config::ExperimentConfig;
use carnot_lab::report::Verdict;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub experiment: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<CheckSummary>,
    pub artifacts: Vec<String>,
    pub all_passed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub verdict: Verdict,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    format!("{digest:x}")
}

pub fn code_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Stage stopwatch that accumulates `StageRecord`s.
pub struct StageClock {
    records: Vec<StageRecord>,
}

impl StageClock {
    pub fn new() -> Self {
        StageClock {
            records: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.records.push(StageRecord {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn into_records(self) -> Vec<StageRecord> {
        self.records
    }
}

impl Default for StageClock {
    fn default() -> Self {
        Self::new()
    }
}
