//! Configuration, dispatch and deterministic report emission for the
//! `almqr` verifiers.

pub mod config;
pub mod run;
pub mod suite;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use almqr_core::report::Table;
use almqr_core::CheckReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{Check, RunConfig};
pub use suite::{suite, Manifest, SuiteSummary};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit statuses.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Io(_) => EXIT_USAGE,
            RunError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<almqr_core::Error> for RunError {
    fn from(e: almqr_core::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else {
            RunError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// One emitted report. Every field except `runtime_seconds` is a function
/// of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub id: String,
    pub check: String,
    pub claim_id: String,
    /// SHA-256 of the canonical JSON of the inputs.
    pub inputs_digest: String,
    pub inputs: RunConfig,
    pub pass: bool,
    pub report: CheckReport,
    pub runtime_seconds: f64,
}

impl ReportRecord {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize") + "\n"
    }

    /// Plot data: the report's table, or its metrics as `metric,value` rows.
    pub fn to_csv(&self) -> String {
        match &self.report.table {
            Some(t) => table_csv(t),
            None => {
                let mut out = String::from("metric,value\n");
                for (k, v) in &self.report.metrics {
                    out.push_str(&format!("{k},{v}\n"));
                }
                out
            }
        }
    }
}

fn table_csv(t: &Table) -> String {
    let mut out = t.columns.join(",");
    out.push('\n');
    for row in &t.rows {
        out.push_str(&row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn inputs_digest(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(&cfg.inputs()).expect("configs serialize");
    hex::encode(Sha256::digest(&canonical))
}

/// Runs the verifier named by `cfg` without writing anything.
pub fn run(cfg: &RunConfig) -> Result<ReportRecord, RunError> {
    let start = Instant::now();
    let report = run::dispatch(cfg)?;
    Ok(ReportRecord {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        id: cfg.label(),
        check: cfg.check.name(),
        claim_id: report.claim_id.clone(),
        inputs_digest: inputs_digest(cfg),
        inputs: cfg.inputs(),
        pass: report.pass,
        report,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(())
}

/// Runs `cfg` and writes the JSON report and CSV plot data to the
/// configured paths. Nothing is written when the run errors.
pub fn run_and_write(cfg: &RunConfig) -> Result<ReportRecord, RunError> {
    let record = run(cfg)?;
    if let Some(path) = &cfg.out {
        write_atomic(path, &record.to_json())?;
    }
    if let Some(path) = &cfg.csv {
        write_atomic(path, &record.to_csv())?;
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_curve_equality_case() {
        let cfg = RunConfig::from_json(r#"{"check":"qr-curve","map":{"map":"power","k":2},"samples":10000}"#).unwrap();
        let rec = run(&cfg).unwrap();
        assert!(rec.pass);
        assert!((rec.report.max_ratio - 1.0).abs() < 1e-9);
        assert_eq!(rec.claim_id, "thm-qr-curve");
        assert_eq!(rec.inputs_digest.len(), 64);
    }

    #[test]
    fn comass_of_trace_vol() {
        let cfg = RunConfig::from_json(r#"{"check":"comass","form":{"kind":"trace_vol","n":2,"d":2},"expect":1.0}"#)
            .unwrap();
        let rec = run(&cfg).unwrap();
        assert!(rec.pass, "{:?}", rec.report);
        assert!((rec.report.metrics["max_comass"] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn missing_fields_are_usage_errors() {
        let cfg = RunConfig::new(Check::QrCurve);
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        assert!(err.to_string().contains("`map`"));
    }

    #[test]
    fn digest_ignores_outputs() {
        let mut a = RunConfig::new(Check::MetricOracle);
        let mut b = a.clone();
        b.out = Some("x.json".into());
        b.id = Some("label".into());
        assert_eq!(inputs_digest(&a), inputs_digest(&b));
        a.seed = 8;
        assert_ne!(inputs_digest(&a), inputs_digest(&b));
    }
}
