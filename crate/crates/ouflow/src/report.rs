//! Experiment outputs: pass/fail checks, CSV tables, JSON report and
//! manifest. Numeric CSV cells use 17 significant digits so a re-parse is
//! bit-faithful, which is what the byte-identity reproducibility contract
//! rides on.

use crate::config::ConfigFile;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// One named assertion with its observed value and threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    /// How `observed` relates to `threshold` when passing, e.g. `<=`.
    pub relation: &'static str,
    pub details: String,
}

impl Check {
    pub fn le(name: impl Into<String>, observed: f64, threshold: f64, details: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            threshold,
            relation: "<=",
            details: details.into(),
        }
    }

    pub fn ge(name: impl Into<String>, observed: f64, threshold: f64, details: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: observed >= threshold,
            observed,
            threshold,
            relation: ">=",
            details: details.into(),
        }
    }
}

/// A plot-ready table.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything one experiment produces.
#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            passed: true,
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn add_check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn add_table(&mut self, table: Table) {
        self.tables.push(table);
    }

    /// One status line per check, plus the verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("experiment: {}\n", self.experiment));
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {}: observed {:.6e} {} {:.6e}  ({})\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.observed,
                c.relation,
                c.threshold,
                c.details
            ));
        }
        out.push_str(&format!(
            "result: {} ({}/{} checks)\n",
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        ));
        out
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let mut f = std::fs::File::create(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(bytes).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Render one table as CSV with round-trip-safe numeric formatting.
pub fn table_to_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// The manifest is enough to re-run bit-identically: full config echo, the
/// effective seed, and the crate version.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a ConfigFile,
    pub outputs: Vec<String>,
}

/// Write `report.json`, `manifest.json`, and one CSV per table under
/// `out_dir`; returns the list of files written (relative names).
pub fn write_artifacts(
    out_dir: &Path,
    config: &ConfigFile,
    report: &ExperimentReport,
) -> Result<Vec<String>, ReportError> {
    let mut outputs = Vec::new();
    for table in &report.tables {
        let name = format!("{}.csv", table.name);
        write_file(&out_dir.join(&name), table_to_csv(table).as_bytes())?;
        outputs.push(name);
    }
    let report_json = serde_json::to_vec_pretty(report)?;
    write_file(&out_dir.join("report.json"), &report_json)?;
    outputs.push("report.json".into());
    let manifest = Manifest {
        experiment: &report.experiment,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config,
        outputs: {
            let mut o = outputs.clone();
            o.push("manifest.json".into());
            o
        },
    };
    let manifest_json = serde_json::to_vec_pretty(&manifest)?;
    write_file(&out_dir.join("manifest.json"), &manifest_json)?;
    outputs.push("manifest.json".into());
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting_is_round_trip_safe() {
        let mut t = Table::new("x", &["a", "b"]);
        let v = std::f64::consts::PI * 1e-7;
        t.push(vec![v, 1.0 / 3.0]);
        let csv = table_to_csv(&t);
        let line = csv.lines().nth(1).unwrap();
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0].to_bits(), v.to_bits());
        assert_eq!(cells[1].to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn summary_reports_failures() {
        let mut r = ExperimentReport::new("demo");
        r.add_check(Check::le("ok", 1.0, 2.0, ""));
        r.add_check(Check::ge("bad", 1.0, 2.0, ""));
        assert!(!r.passed);
        let s = r.summary();
        assert!(s.contains("[pass] ok"));
        assert!(s.contains("[FAIL] bad"));
        assert!(s.contains("1/2 checks"));
    }
}
