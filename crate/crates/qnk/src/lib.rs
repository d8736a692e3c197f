//! Config-driven scenario runner for the `qnk-core` numerics.
//!
//! A config file lists scenarios; each one runs into its own directory under
//! the output root and leaves `report.txt`, `diag.csv`, the resolved
//! `config.toml` and kind-specific CSV files behind.

pub mod config;
pub mod io;
pub mod scenario;
pub mod selftest;
pub mod well;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

pub use config::{load_config, parse_config, Scenario, ScenarioKind};
pub use io::Report;
pub use scenario::run_scenario;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "QNK_THREADS";

/// Worker count: `QNK_THREADS` if set and positive, else the available
/// parallelism.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(avail),
        _ => avail,
    }
}

/// Runs the scenarios into `out/<name>`; in parallel when asked.
pub fn run_all(scenarios: &[Scenario], out: &Path, parallel: bool) -> Result<Vec<Report>> {
    let dir = |s: &Scenario| -> PathBuf { out.join(&s.name) };
    if !parallel || scenarios.len() < 2 {
        return scenarios.iter().map(|s| run_scenario(s, &dir(s))).collect();
    }
    let workers = worker_count();
    log::info!("{} scenarios on {workers} workers", scenarios.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building the worker pool")?;
    pool.install(|| scenarios.par_iter().map(|s| run_scenario(s, &dir(s))).collect())
}
