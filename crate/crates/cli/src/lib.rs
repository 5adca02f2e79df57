//! Configuration-driven driver for the tfloc experiments.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

use config::{Config, Experiment, UsageError};
use experiments::RunError;
use report::Report;

/// Runs `experiment` and persists its artifacts under `out_root`.
pub fn execute(cfg: &Config, experiment: Experiment, out_root: &Path) -> Result<(Report, PathBuf), RunError> {
    let report = experiments::run(cfg, experiment)?;
    let dir = report::run_directory(out_root, experiment.name())
        .map_err(|e| UsageError(format!("cannot create output directory under {}: {e}", out_root.display())))?;
    report
        .write(&dir)
        .map_err(|e| UsageError(format!("cannot write report into {}: {e}", dir.display())))?;
    Ok((report, dir))
}

/// One `PASS`/`FAIL` line per metric.
pub fn summary_lines(report: &Report) -> Vec<String> {
    report
        .metrics
        .iter()
        .map(|m| {
            let tol = match m.tolerance {
                Some(t) => format!(" ({:?} {t:e})", m.relation),
                None => String::new(),
            };
            format!("{} {}: {:e}{tol}", if m.passed { "PASS" } else { "FAIL" }, m.name, m.value)
        })
        .collect()
}
