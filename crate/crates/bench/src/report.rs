//! JSON summaries and CSV tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{BenchError, Result};

/// Where a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    /// Worker threads used by the run; every command runs single-threaded.
    pub threads: usize,
    pub optimized: bool,
    pub version: String,
}

impl Machine {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            threads: 1,
            optimized: !cfg!(debug_assertions),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Envelope of every JSON summary: the fully resolved config travels with
/// the results so a run can be repeated from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub machine: Machine,
    pub result: T,
}

pub fn write_report<T: Serialize>(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    result: T,
) -> Result<()> {
    let report = Report {
        command: command.into(),
        seed: config.seed,
        config: config.clone(),
        machine: Machine::current(),
        result,
    };
    let path = dir.join(format!("{command}.json"));
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(&path, text + "\n").map_err(|e| BenchError::io(&path, e))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| BenchError::io(path, e))
}
