//! Run configurations: one verifier, its inputs, budgets and outputs.

use std::path::PathBuf;
use std::str::FromStr;

use almqr_core::covers::MapSpec;
use almqr_core::forms::FormSpec;
use almqr_core::modulus::{FamilySpec, ScalarField};
use almqr_core::mvcalc::{MultiValuedMap, TestFormSpec};
use almqr_core::region::Region;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::RunError;

/// Verifier names, as used by `almqr verify <check>` and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    MetricOracle,
    MetricAxioms,
    Barycenter,
    Comass,
    NaturalComass,
    Symmetrization,
    SplitPullback,
    Stokes,
    QrCurve,
    GeneralizedInverse,
    Feps,
    Continuity,
    Pseudomonotone,
    PreimageMeasure,
    Monodromy,
    UpperGradient,
    AreaFormula,
    EnergyBound,
    JacobianVsH,
    MetricQc,
    Ahlfors,
    Modulus,
    GeomQc,
}

impl Check {
    /// Stable id of the statement the check verifies.
    pub fn claim_id(self) -> &'static str {
        match self {
            Check::MetricOracle | Check::MetricAxioms => "eq-almgren-metric",
            Check::Barycenter => "lemma-barycenter",
            Check::Comass | Check::NaturalComass => "lemma-comass-natural",
            Check::Symmetrization => "lemma-proj-invariant",
            Check::SplitPullback => "lemma-pullback-decomposition",
            Check::Stokes => "thm-lip-pullback-weak",
            Check::QrCurve => "thm-qr-curve",
            Check::GeneralizedInverse => "cor-qr-curve-generalized-inverse",
            Check::Feps => "prop-multivalued-approx",
            Check::Continuity => "lemma-homeo",
            Check::Pseudomonotone => "lemma-pseudomonotone",
            Check::PreimageMeasure => "prop-preimage-measure",
            Check::Monodromy => "prop-lifts",
            Check::UpperGradient => "thm-weak-upper-gradient",
            Check::AreaFormula => "lemma-co-area",
            Check::EnergyBound => "cor-sobolev-energy",
            Check::JacobianVsH => "prop-jacobian-vs-h",
            Check::MetricQc => "prop-metric-qc",
            Check::Ahlfors => "prop-ball-upper",
            Check::Modulus | Check::GeomQc => "thm-geom-qc",
        }
    }

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

/// A synthetic Lipschitz multi-valued map
/// `x ↦ Σ_j ⟦Ax + b + |⟨c, x⟩ − t| w_j⟧` (used by the `feps` check).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSpec {
    pub domain: Region,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub t: f64,
    pub w: Vec<Vec<f64>>,
}

impl FoldSpec {
    pub fn build(&self) -> almqr_core::Result<MultiValuedMap> {
        let rows = self.a.len();
        let cols = self.a.first().map_or(0, Vec::len);
        if rows == 0 || self.a.iter().any(|r| r.len() != cols) {
            return Err(almqr_core::Error::InvalidArgument("fold: field `a` must be a rectangular matrix".into()));
        }
        let a = DMatrix::from_fn(rows, cols, |i, j| self.a[i][j]);
        MultiValuedMap::folded(self.domain.clone(), a, self.b.clone(), self.c.clone(), self.t, self.w.clone())
    }
}

fn default_seed() -> u64 {
    7
}

/// Everything a run depends on. Unused fields are ignored by checks that do
/// not need them; missing required fields are usage errors naming the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub check: Check,
    /// Label used for report file names and the suite summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<FoldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testform: Option<TestFormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Base point (`y`, a loop centre, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Evaluation points or ball centres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Grid resolutions or quadrature orders, coarsest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<ScalarField>,
    /// `(n, d)` for checks on `(Rⁿ)^d` that take no map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Expected value (comass) or outcome (monodromy: 1 expects a swap).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// JSON report path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// CSV plot-data path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(check: Check) -> Self {
        RunConfig {
            check,
            id: None,
            map: None,
            fold: None,
            form: None,
            testform: None,
            region: None,
            family: None,
            point: None,
            points: None,
            radius: None,
            radii: None,
            samples: None,
            grid: None,
            exponent: None,
            epsilon: None,
            field: None,
            shape: None,
            tol: None,
            expect: None,
            seed: default_seed(),
            out: None,
            csv: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Usage(format!("invalid config: {e}")))
    }

    /// The inputs that determine the result: everything except labels and
    /// output paths.
    pub fn inputs(&self) -> RunConfig {
        RunConfig { id: None, out: None, csv: None, ..self.clone() }
    }

    /// Label for file names: the `id`, or the check name.
    pub fn label(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.check.name())
    }
}

/// Overlays the fields present in `overrides` (a JSON object) onto `base`.
pub fn merge(base: &RunConfig, overrides: &serde_json::Value) -> Result<RunConfig, RunError> {
    let mut value = serde_json::to_value(base).map_err(|e| RunError::Usage(e.to_string()))?;
    let (Some(target), Some(over)) = (value.as_object_mut(), overrides.as_object()) else {
        return Err(RunError::Usage("config file must hold a JSON object".into()));
    };
    for (k, v) in over {
        target.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| RunError::Usage(format!("invalid config: {e}")))
}

fn numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

/// A region given as JSON or as `annulus:inner,outer`, `ball:c₁,…,c_n,r`
/// or `box:lo₁,…,lo_n,hi₁,…,hi_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionArg(pub Region);

impl FromStr for RegionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s).map(RegionArg).map_err(|e| e.to_string());
        }
        let (kind, rest) = s.split_once(':').ok_or("expected kind:numbers or JSON")?;
        let v = numbers(rest)?;
        let region = match kind {
            "annulus" if v.len() == 2 => Region::Annulus { center: [0.0, 0.0], inner: v[0], outer: v[1] },
            "annulus" if v.len() == 4 => Region::Annulus { center: [v[2], v[3]], inner: v[0], outer: v[1] },
            "ball" if v.len() >= 2 => Region::Ball { center: v[..v.len() - 1].to_vec(), radius: v[v.len() - 1] },
            "box" if !v.is_empty() && v.len() % 2 == 0 => {
                let n = v.len() / 2;
                Region::Box { lo: v[..n].to_vec(), hi: v[n..].to_vec() }
            }
            _ => return Err(format!("cannot read region `{s}`")),
        };
        region.validate().map_err(|e| e.to_string())?;
        Ok(RegionArg(region))
    }
}

/// Comma-separated numbers or a JSON array.
#[derive(Debug, Clone, PartialEq)]
pub struct Numbers(pub Vec<f64>);

impl FromStr for Numbers {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('[') {
            return serde_json::from_str(s).map(Numbers).map_err(|e| e.to_string());
        }
        numbers(s).map(Numbers)
    }
}

/// Parses a JSON flag value, naming the flag on failure.
pub fn json_flag<T: serde::de::DeserializeOwned>(flag: &str, text: &str) -> Result<T, RunError> {
    serde_json::from_str(text).map_err(|e| RunError::Usage(format!("--{flag}: {e}")))
}
