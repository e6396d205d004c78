//! Manifest runs: every entry concurrently (up to a job bound), one report
//! per entry, and a summary with one row per claim-id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{run, write_atomic, RunError, EXIT_FAIL, EXIT_PASS};

/// A list of runs, either bare or as `{"runs": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Manifest {
    Bare(Vec<RunConfig>),
    Wrapped { runs: Vec<RunConfig> },
}

impl Manifest {
    pub fn runs(&self) -> &[RunConfig] {
        match self {
            Manifest::Bare(r) | Manifest::Wrapped { runs: r } => r,
        }
    }

    /// Parses a manifest, naming the offending entry on failure.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RunError::Usage(format!("invalid manifest: {e}")))?;
        let (entries, wrapped) = match &value {
            serde_json::Value::Array(a) => (a.clone(), false),
            serde_json::Value::Object(o) => match o.get("runs") {
                Some(serde_json::Value::Array(a)) if o.len() == 1 => (a.clone(), true),
                _ => return Err(RunError::Usage("invalid manifest: expected an array or {\"runs\": [...]}".into())),
            },
            _ => return Err(RunError::Usage("invalid manifest: expected an array or {\"runs\": [...]}".into())),
        };
        let runs = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| serde_json::from_value(e).map_err(|err| RunError::Usage(format!("manifest entry {i}: {err}"))))
            .collect::<Result<Vec<RunConfig>, _>>()?;
        Ok(if wrapped { Manifest::Wrapped { runs } } else { Manifest::Bare(runs) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub id: String,
    pub check: String,
    pub claim_id: String,
    /// `PASS`, `FAIL`, or `ERROR`.
    pub status: String,
    pub max_ratio: f64,
    pub excluded: u64,
    /// Report file, or the error message.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status == "PASS")
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    /// Per-claim coverage table followed by the individual runs.
    pub fn to_markdown(&self) -> String {
        let mut by_claim: BTreeMap<&str, (Vec<&str>, usize, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = by_claim.entry(&r.claim_id).or_default();
            if !e.0.contains(&r.check.as_str()) {
                e.0.push(&r.check);
            }
            e.1 += 1;
            e.2 += usize::from(r.status == "PASS");
        }
        let mut out = String::from("# almqr suite summary\n\n| claim | checks | runs | passed | status |\n|---|---|---|---|---|\n");
        for (claim, (checks, runs, passed)) in &by_claim {
            let status = if passed == runs { "PASS" } else { "FAIL" };
            out.push_str(&format!("| {claim} | {} | {runs} | {passed} | {status} |\n", checks.join(", ")));
        }
        out.push_str("\n## Runs\n\n| id | check | claim | status | max_ratio | excluded | report |\n|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} |\n",
                r.id,
                r.check,
                r.claim_id,
                r.status,
                r.max_ratio,
                r.excluded,
                r.detail.replace('|', "\\|")
            ));
        }
        out
    }
}

fn entry_paths(cfg: &RunConfig, index: usize, out_dir: &Path) -> (PathBuf, PathBuf) {
    let stem = format!("{index:03}-{}", cfg.label());
    let json = cfg.out.clone().unwrap_or_else(|| out_dir.join(format!("{stem}.json")));
    let csv = cfg.csv.clone().unwrap_or_else(|| out_dir.join(format!("{stem}.csv")));
    (json, csv)
}

fn run_entry(cfg: &RunConfig, index: usize, out_dir: &Path) -> SuiteRow {
    let (json, csv) = entry_paths(cfg, index, out_dir);
    let result = run(cfg).and_then(|rec| {
        write_atomic(&json, &rec.to_json())?;
        write_atomic(&csv, &rec.to_csv())?;
        Ok(rec)
    });
    match result {
        Ok(rec) => SuiteRow {
            id: cfg.label(),
            check: rec.check,
            claim_id: rec.claim_id,
            status: if rec.pass { "PASS" } else { "FAIL" }.into(),
            max_ratio: rec.report.max_ratio,
            excluded: rec.report.excluded,
            detail: json.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        },
        Err(e) => SuiteRow {
            id: cfg.label(),
            check: cfg.check.name(),
            claim_id: cfg.check.claim_id().into(),
            status: "ERROR".into(),
            max_ratio: f64::NAN,
            excluded: 0,
            detail: e.to_string(),
        },
    }
}

/// Runs every entry with at most `jobs` worker threads and writes the
/// reports plus `summary.md` and `summary.json` into `out_dir`. Failing
/// entries do not stop the others.
pub fn suite(manifest: &Manifest, jobs: usize, out_dir: &Path) -> Result<SuiteSummary, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::Usage(e.to_string()))?;
    let rows: Vec<SuiteRow> = pool.install(|| {
        manifest.runs().par_iter().enumerate().map(|(i, cfg)| run_entry(cfg, i, out_dir)).collect()
    });
    let summary = SuiteSummary { rows };
    write_atomic(&out_dir.join("summary.md"), &summary.to_markdown())?;
    let json = serde_json::to_string_pretty(&summary).expect("summaries serialize") + "\n";
    write_atomic(&out_dir.join("summary.json"), &json)?;
    Ok(summary)
}
