//! Report model and artifact layout.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ tolerance`
    AtMost,
    /// `value ≥ tolerance`
    AtLeast,
    /// `value < tolerance`
    Below,
    /// Recorded only; always passes.
    Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub relation: Relation,
    pub passed: bool,
}

impl Metric {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(tolerance), relation: Relation::AtMost, passed: value <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(tolerance), relation: Relation::AtLeast, passed: value >= tolerance }
    }

    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(tolerance), relation: Relation::Below, passed: value < tolerance }
    }

    pub fn report(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: None, relation: Relation::Report, passed: true }
    }
}

/// One CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Full-precision cell.
pub fn num(x: f64) -> String {
    format!("{x:.17e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub grid: GridInfo,
    pub passed: bool,
    pub failed: Vec<String>,
    pub metrics: Vec<Metric>,
    /// Plot-ready sequences (σ-profiles and similar).
    pub series: BTreeMap<String, Vec<f64>>,
    /// Non-numeric findings, e.g. which sign rule matched.
    pub details: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<(String, Table)>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridInfo {
    pub width: f64,
    pub points: usize,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, grid: GridInfo) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            grid,
            passed: true,
            failed: Vec::new(),
            metrics: Vec::new(),
            series: BTreeMap::new(),
            details: BTreeMap::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    pub fn series(&mut self, name: &str, values: Vec<f64>) {
        self.series.insert(name.to_string(), values);
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) {
        self.details.insert(name.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn table(&mut self, file: &str, table: Table) {
        self.tables.push((file.to_string(), table));
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Recomputes `passed`/`failed`/`artifacts` from the metric list and tables.
    pub fn finish(&mut self) {
        self.failed = self.metrics.iter().filter(|m| !m.passed).map(|m| m.name.clone()).collect();
        self.passed = self.failed.is_empty();
        self.artifacts = self.tables.iter().map(|(f, _)| f.clone()).collect();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json` and the CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json() + "\n")?;
        for (file, t) in &self.tables {
            t.write(&dir.join(file))?;
        }
        Ok(())
    }
}

pub const OUT_ENV: &str = "TFLOC_OUT";

/// `--out`, then `$TFLOC_OUT`, then `./out`.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
    }
}

/// Creates `root/<experiment>/<timestamp>` and points `root/<experiment>/latest` at it.
pub fn run_directory(root: &Path, experiment: &str) -> io::Result<PathBuf> {
    let parent = root.join(experiment);
    fs::create_dir_all(&parent)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ").to_string();
    let mut dir = parent.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        dir = parent.join(format!("{stamp}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir)?;
    let name = dir.file_name().expect("timestamp directory").to_string_lossy().into_owned();
    fs::write(parent.join("latest"), name + "\n")?;
    Ok(dir)
}

/// Resolves the `latest` pointer of an experiment.
pub fn latest(root: &Path, experiment: &str) -> io::Result<PathBuf> {
    let parent = root.join(experiment);
    let name = fs::read_to_string(parent.join("latest"))?;
    Ok(parent.join(name.trim()))
}
