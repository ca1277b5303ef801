//! Front end of the `bifree` and `bnc` binaries: experiment configs, the check
//! suite, point verification and JSON reports.

pub mod config;
pub mod oracles;
pub mod report;
pub mod schema;
pub mod suite;
pub mod verify;

use thiserror::Error;

/// Exit status of a run.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown check {name:?}; valid names: {valid}")]
    UnknownCheck { name: String, valid: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lib(#[from] bifree::Error),
}

/// Default worker count: `BIFREE_JOBS`, else the number of CPUs.
pub fn default_jobs() -> usize {
    std::env::var("BIFREE_JOBS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
