//! The weak identity `d(f^*ω) = f^*(dω)` tested against compactly supported
//! forms `α = ψ β`:
//!
//! `∫ dα ∧ f^*ω = (−1)^{m−k} ∫ α ∧ f^*(dω)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::differential::differential;
use super::map::MultiValuedMap;
use super::pullback::{hodge_star_top, pullback_with};
use crate::error::{Error, Result};
use crate::forms::{Invariance, KCovector, KForm, DEFAULT_FD_STEP};
use crate::numeric::gauss_legendre;
use crate::report::{CheckReport, Table};

/// `α = ψ β` with the bump `ψ(x) = Π_i (1 − s_i²)^p`, `s_i` the affine
/// coordinate taking `[lo_i, hi_i]` to `[−1, 1]`, and a constant covector `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestForm {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub power: u32,
    pub beta: KCovector,
}

/// JSON description of a [`TestForm`]; `beta` lists the terms
/// `coeff · dx_{i_1} ∧ … ∧ dx_{i_l}` (0-based indices, empty for a scalar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFormSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "default_power")]
    pub power: u32,
    pub beta: Vec<BetaTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaTerm {
    #[serde(default)]
    pub indices: Vec<usize>,
    pub coeff: f64,
}

fn default_power() -> u32 {
    4
}

impl TestFormSpec {
    pub fn build(&self) -> Result<TestForm> {
        let m = self.lo.len();
        let first = self.beta.first().ok_or_else(|| Error::InvalidArgument("beta: no terms".into()))?;
        let k = first.indices.len();
        let mut beta = KCovector::zero(m, k);
        for t in &self.beta {
            if t.indices.len() != k {
                return Err(Error::InvalidArgument("beta: terms of different degrees".into()));
            }
            beta = beta.add(&KCovector::elementary(m, &t.indices, t.coeff)?)?;
        }
        TestForm::new(self.lo.clone(), self.hi.clone(), self.power, beta)
    }
}

impl TestForm {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, power: u32, beta: KCovector) -> Result<Self> {
        let t = TestForm { lo, hi, power, beta };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.lo.len();
        if m == 0 || self.hi.len() != m || self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("test form support must be a non-degenerate box".into()));
        }
        if self.beta.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.beta.dim() });
        }
        if self.power < 2 {
            return Err(Error::InvalidArgument("bump exponent must be at least 2".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn degree(&self) -> usize {
        self.beta.degree()
    }

    fn coords(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (2.0 * v - a - b) / (b - a))
            .collect()
    }

    pub fn bump(&self, x: &[f64]) -> f64 {
        let p = self.power as i32;
        self.coords(x).iter().map(|s| if s.abs() < 1.0 { (1.0 - s * s).powi(p) } else { 0.0 }).product()
    }

    pub fn bump_gradient(&self, x: &[f64]) -> Vec<f64> {
        let p = self.power as i32;
        let s = self.coords(x);
        let factors: Vec<f64> = s.iter().map(|si| if si.abs() < 1.0 { (1.0 - si * si).powi(p) } else { 0.0 }).collect();
        (0..s.len())
            .map(|i| {
                if s[i].abs() >= 1.0 {
                    return 0.0;
                }
                let ds = 2.0 / (self.hi[i] - self.lo[i]);
                let di = -2.0 * p as f64 * s[i] * (1.0 - s[i] * s[i]).powi(p - 1) * ds;
                factors.iter().enumerate().map(|(j, f)| if j == i { di } else { *f }).product()
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> KCovector {
        self.beta.scale(self.bump(x))
    }

    /// `dα = dψ ∧ β`.
    pub fn derivative(&self, x: &[f64]) -> Result<KCovector> {
        let g = self.bump_gradient(x);
        let mut dpsi = KCovector::zero(self.dim(), 1);
        for (i, gi) in g.iter().enumerate() {
            dpsi.add_term(&[i], *gi);
        }
        dpsi.wedge(&self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesSettings {
    /// Gauss–Legendre orders per axis, coarsest first.
    pub orders: Vec<usize>,
    pub tol: f64,
    pub fd_step: f64,
}

impl Default for StokesSettings {
    fn default() -> Self {
        StokesSettings { orders: vec![16, 32, 64], tol: 1e-3, fd_step: 1e-6 }
    }
}

/// Integrals at one quadrature level.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Level {
    lhs: f64,
    rhs: f64,
    abs_lhs: f64,
    abs_rhs: f64,
}

fn tensor_nodes(test: &TestForm, order: usize) -> Vec<(Vec<f64>, f64)> {
    let rules: Vec<Vec<(f64, f64)>> =
        test.lo.iter().zip(&test.hi).map(|(a, b)| gauss_legendre(order, *a, *b)).collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for rule in &rules {
        out = out
            .into_iter()
            .flat_map(|(x, w)| {
                rule.iter().map(move |(t, wt)| {
                    let mut y = x.clone();
                    y.push(*t);
                    (y, w * wt)
                })
            })
            .collect();
    }
    out
}

fn integrate(f: &MultiValuedMap, omega: &KForm, d_omega: &KForm, test: &TestForm, order: usize, h: f64) -> Result<Level> {
    let nodes = tensor_nodes(test, order);
    let parts: Vec<Level> = nodes
        .par_iter()
        .map(|(x, w)| {
            let df = differential(f, x, h)?;
            let a = test.derivative(x)?.wedge(&pullback_with(&df, omega)?)?;
            let b = test.eval(x).wedge(&pullback_with(&df, d_omega)?)?;
            let (a, b) = (hodge_star_top(&a)?, hodge_star_top(&b)?);
            Ok(Level { lhs: w * a, rhs: w * b, abs_lhs: w * a.abs(), abs_rhs: w * b.abs() })
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold(Level { lhs: 0.0, rhs: 0.0, abs_lhs: 0.0, abs_rhs: 0.0 }, |s, p| Level {
        lhs: s.lhs + p.lhs,
        rhs: s.rhs + p.rhs,
        abs_lhs: s.abs_lhs + p.abs_lhs,
        abs_rhs: s.abs_rhs + p.abs_rhs,
    }))
}

/// Compares `∫ dα ∧ f^*ω` with `(−1)^{m−k} ∫ α ∧ f^*(dω)` by tensor
/// Gauss–Legendre quadrature over the support of `α`.
///
/// The relative discrepancy is normalized by `∫|·|` of both integrands.
/// PASS iff it is below `tol` at the finest order and does not grow under
/// refinement (beyond a `1e-10` roundoff floor). The discrepancy with the
/// opposite sign `(−1)^{k+1}` is reported as `alt_sign_discrepancy`; the two
/// conventions agree only for odd `m`.
pub fn weak_stokes_check(
    f: &MultiValuedMap,
    omega: &KForm,
    test: &TestForm,
    settings: &StokesSettings,
) -> Result<CheckReport> {
    test.validate()?;
    let (m, k) = (f.m(), omega.degree());
    if test.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: test.dim() });
    }
    if k + 1 > m || test.degree() != m - k - 1 {
        return Err(Error::FormMismatch(format!(
            "test form must have degree m − k − 1 = {}, got {}",
            (m as isize) - (k as isize) - 1,
            test.degree()
        )));
    }
    if omega.n() != f.n() || omega.d() != f.d() || omega.invariance() != Invariance::Full {
        return Err(Error::FormMismatch("weak Stokes needs an S_d-invariant form on (R^n)^d".into()));
    }
    if !f.domain().contains_box(&test.lo, &test.hi) {
        return Err(Error::InvalidArgument("test form support must lie in the domain".into()));
    }
    if settings.orders.is_empty() {
        return Err(Error::InvalidArgument("no quadrature orders".into()));
    }
    let d_omega = omega.exterior_derivative(DEFAULT_FD_STEP).with_invariance(Invariance::Full);
    let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
    let alt = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for &order in &settings.orders {
        let l = integrate(f, omega, &d_omega, test, order, settings.fd_step)?;
        let scale = l.abs_lhs + l.abs_rhs;
        let rel = |s: f64| if scale > 0.0 { (l.lhs - s * l.rhs).abs() / scale } else { 0.0 };
        rows.push(vec![order as f64, l.lhs, sign * l.rhs, (l.lhs - sign * l.rhs).abs(), rel(sign), rel(alt)]);
        levels.push((l, rel(sign), rel(alt)));
    }
    let (fine, rel, alt_rel) = *levels.last().unwrap();
    let monotone = levels.windows(2).all(|w| w[1].1 <= w[0].1.max(1e-10));
    let richardson = if levels.len() >= 2 {
        let prev = levels[levels.len() - 2].0;
        (fine.lhs - prev.lhs).abs().max((fine.rhs - prev.rhs).abs())
    } else {
        f64::NAN
    };
    let mut report = CheckReport::new("weak_stokes", "thm-lip-pullback-weak");
    report.n_samples = settings.orders.last().unwrap().pow(m as u32) as u64;
    report.max_ratio = rel;
    report
        .metric("lhs", fine.lhs)
        .metric("rhs", sign * fine.rhs)
        .metric("abs_discrepancy", (fine.lhs - sign * fine.rhs).abs())
        .metric("rel_discrepancy", rel)
        .metric("alt_sign_discrepancy", alt_rel)
        .metric("richardson_error", richardson)
        .metric("monotone", if monotone { 1.0 } else { 0.0 });
    report.threshold("rel_discrepancy", settings.tol);
    report.table = Some(Table {
        columns: ["order", "lhs", "signed_rhs", "abs_discrepancy", "rel_discrepancy", "alt_sign_discrepancy"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    });
    if richardson > settings.tol * (fine.abs_lhs + fine.abs_rhs) {
        report.note("quadrature has not converged between the two finest orders");
    }
    report.pass = rel < settings.tol && monotone;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::BranchedCover;
    use crate::forms::{natural_form, symmetrize, GroupAction};
    use crate::region::Region;
    use nalgebra::DMatrix;

    fn scalar_test(lo: Vec<f64>, hi: Vec<f64>) -> TestForm {
        let m = lo.len();
        TestForm::new(lo, hi, 4, KCovector::scalar(m, 1.0)).unwrap()
    }

    /// `Σ_j x_{j,1} dx_{j,2}` on `(R²)^d`: invariant, with `d = Σ dx_{j,1} ∧ dx_{j,2}`.
    fn trace_x1dx2(d: usize) -> KForm {
        let base = KForm::from_fn(2, d, 1, Invariance::None, move |x: &[f64]| {
            let mut c = KCovector::zero(2 * d, 1);
            c.add_term(&[1], x[0]);
            c
        });
        symmetrize(&base, &GroupAction::full(2, d).unwrap()).unwrap()
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let t = scalar_test(vec![0.0, -1.0], vec![2.0, 1.0]);
        let x = [0.7, 0.2];
        let g = t.bump_gradient(&x);
        for i in 0..2 {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[i] += 1e-6;
            q[i] -= 1e-6;
            assert!((g[i] - (t.bump(&p) - t.bump(&q)) / 2e-6).abs() < 1e-8);
        }
        assert_eq!(t.bump(&[3.0, 0.0]), 0.0);
    }

    #[test]
    fn square_root_on_annulus() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.25, 2.0)).unwrap();
        let t = scalar_test(vec![0.5, -0.5], vec![1.5, 0.5]);
        let rep = weak_stokes_check(&f, &trace_x1dx2(2), &t, &StokesSettings::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        // ω_2 is top degree on R², so no test form of degree −1 exists
        assert!(weak_stokes_check(&f, &natural_form(2, 2), &t, &StokesSettings::default()).is_err());
    }

    #[test]
    fn closed_form_integrates_to_zero() {
        let a0 = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -1.0]);
        let a1 = DMatrix::from_row_slice(2, 3, &[0.3, 0.0, 2.0, 1.0, 0.2, 0.4]);
        let f = MultiValuedMap::folded(
            Region::unit_box(3),
            a0.clone(),
            vec![0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            0.9,
            vec![vec![1.0, 0.5], vec![-1.0, -0.5]],
        )
        .unwrap();
        let g = MultiValuedMap::affine_branches(Region::unit_box(3), vec![a0, a1], vec![vec![0.0; 2]; 2]).unwrap();
        let t = scalar_test(vec![0.1, 0.2, 0.1], vec![0.8, 0.9, 0.7]);
        for map in [&f, &g] {
            let rep = weak_stokes_check(map, &natural_form(2, 2), &t, &StokesSettings::default()).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert_eq!(rep.metrics["rhs"], 0.0);
            assert!(rep.metrics["lhs"].abs() < 1e-12);
        }
    }

    #[test]
    fn single_valued_smooth_map() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
        let f = MultiValuedMap::affine_branches(Region::unit_box(2), vec![a], vec![vec![0.1, 0.0]]).unwrap();
        let t = scalar_test(vec![0.1, 0.2], vec![0.9, 0.8]);
        let rep = weak_stokes_check(&f, &trace_x1dx2(1), &t, &StokesSettings::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["rel_discrepancy"] < 1e-9);
        // in even dimension the opposite sign convention fails
        assert!(rep.metrics["alt_sign_discrepancy"] > 0.1);
    }

    #[test]
    fn test_form_from_json() {
        let spec: TestFormSpec =
            serde_json::from_str(r#"{"lo":[0.5,-0.5],"hi":[1.5,0.5],"beta":[{"coeff":2.0}]}"#).unwrap();
        let t = spec.build().unwrap();
        assert_eq!(t.power, 4);
        assert_eq!(t.degree(), 0);
        assert_eq!(t.eval(&[1.0, 0.0]).coefficient(&[]), 2.0);
        let bad: TestFormSpec = serde_json::from_str(r#"{"lo":[0,0],"hi":[1,1],"beta":[]}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn rejects_mismatched_degrees() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.25, 2.0)).unwrap();
        let t = TestForm::new(vec![0.5, -0.5], vec![1.5, 0.5], 4, KCovector::elementary(2, &[0], 1.0).unwrap()).unwrap();
        assert!(weak_stokes_check(&f, &trace_x1dx2(2), &t, &StokesSettings::default()).is_err());
    }
}
