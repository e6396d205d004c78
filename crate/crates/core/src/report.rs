use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of a verifier: the headline numbers, the thresholds they were
/// judged against, and whether the check passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub claim_id: String,
    pub pass: bool,
    pub n_samples: u64,
    pub max_ratio: f64,
    pub excluded: u64,
    pub metrics: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    /// Free-form remarks, e.g. which samples were excluded and why.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Optional tabular data for plotting (CSV export).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CheckReport {
    pub fn new(check: &str, claim_id: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            claim_id: claim_id.to_string(),
            pass: false,
            n_samples: 0,
            max_ratio: f64::NAN,
            excluded: 0,
            metrics: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            notes: Vec::new(),
            table: None,
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn threshold(&mut self, key: &str, value: f64) -> &mut Self {
        self.thresholds.insert(key.to_string(), value);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }
}
