use super::differential::{differential, MVDifferential};
use super::map::MultiValuedMap;
use crate::error::{Error, Result};
use crate::forms::{comass_covector, ComassSettings, Invariance, KCovector, KForm};
use crate::report::CheckReport;

/// `(f^*ω)_x` on `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackSample {
    pub x: Vec<f64>,
    pub value: KCovector,
}

/// `ω_{f(x)} ∘ D_x f` from a differential; no invariance check.
pub fn pullback_with(df: &MVDifferential, omega: &KForm) -> Result<KCovector> {
    let point = df.concatenated();
    if point.len() != omega.dim() {
        return Err(Error::FormMismatch(format!(
            "form lives on R^{}, map values on (R^n)^d = R^{}",
            omega.dim(),
            point.len()
        )));
    }
    omega.eval(&point).pullback(&df.stacked())
}

fn check_full(f: &MultiValuedMap, omega: &KForm) -> Result<()> {
    if omega.n() != f.n() || omega.d() != f.d() {
        return Err(Error::FormMismatch(format!(
            "form on (R^{})^{} cannot be pulled back by a map into A_{}(R^{})",
            omega.n(),
            omega.d(),
            f.d(),
            f.n()
        )));
    }
    if omega.invariance() != Invariance::Full {
        return Err(Error::FormMismatch(
            "only S_d-invariant forms have a well-defined pull-back by a general multi-valued map".into(),
        ));
    }
    Ok(())
}

/// `(f^*ω)_x = ω_{f(x)} ∘ D_x f` for an `S_d`-invariant form.
pub fn pullback(f: &MultiValuedMap, omega: &KForm, x: &[f64], h: f64) -> Result<PullbackSample> {
    check_full(f, omega)?;
    let df = differential(f, x, h)?;
    Ok(PullbackSample { x: x.to_vec(), value: pullback_with(&df, omega)? })
}

/// The pull-back computed with the branches listed in the order `perm`.
pub fn pullback_relabeled(
    f: &MultiValuedMap,
    omega: &KForm,
    x: &[f64],
    h: f64,
    perm: &[usize],
) -> Result<PullbackSample> {
    check_full(f, omega)?;
    let df = differential(f, x, h)?.relabeled(perm);
    Ok(PullbackSample { x: x.to_vec(), value: pullback_with(&df, omega)? })
}

/// `⟦f₀, f₁⟧^*ω` for an `S_{d₀} × S_{d₁}`-invariant form.
pub fn pullback_split(
    f0: &MultiValuedMap,
    f1: &MultiValuedMap,
    omega: &KForm,
    x: &[f64],
    h: f64,
) -> Result<PullbackSample> {
    let (d0, d1) = (f0.d(), f1.d());
    if f0.n() != f1.n() || f0.m() != f1.m() || omega.n() != f0.n() || omega.d() != d0 + d1 {
        return Err(Error::FormMismatch("split pull-back: incompatible dimensions".into()));
    }
    match omega.invariance() {
        Invariance::Full => {}
        Invariance::Split(a, b) if (a, b) == (d0, d1) => {}
        other => {
            return Err(Error::FormMismatch(format!(
                "split pull-back by ({d0}, {d1}) needs an invariant form, got {other:?}"
            )))
        }
    }
    let a = differential(f0, x, h)?;
    let b = differential(f1, x, h)?;
    let joined = MVDifferential {
        x: x.to_vec(),
        values: a.values.iter().chain(&b.values).cloned().collect(),
        maps: a.maps.iter().chain(&b.maps).cloned().collect(),
        on_singular_set: a.on_singular_set || b.on_singular_set,
        ambiguous: a.ambiguous || b.ambiguous,
        exact: a.exact && b.exact,
    };
    Ok(PullbackSample { x: x.to_vec(), value: pullback_with(&joined, omega)? })
}

/// `⋆α` for a top-degree covector: its coefficient on `dx₁ ∧ … ∧ dx_m`.
pub fn hodge_star_top(alpha: &KCovector) -> Result<f64> {
    if alpha.degree() != alpha.dim() {
        return Err(Error::InvalidArgument(format!(
            "Hodge star of top degree needs k = m, got k = {}, m = {}",
            alpha.degree(),
            alpha.dim()
        )));
    }
    let idx: Vec<usize> = (0..alpha.dim()).collect();
    Ok(alpha.coefficient(&idx))
}

/// `‖(f^*ω)_x‖ ≤ |D_x f|^k ‖ω_{f(x)}‖` at the given points.
pub fn pullback_estimate_check(f: &MultiValuedMap, omega: &KForm, points: &[Vec<f64>], h: f64) -> Result<CheckReport> {
    check_full(f, omega)?;
    let settings = ComassSettings::default();
    let k = omega.degree() as i32;
    let mut worst: f64 = 0.0;
    let mut excluded = 0u64;
    for x in points {
        let df = differential(f, x, h)?;
        if df.ambiguous {
            excluded += 1;
            continue;
        }
        let pulled = pullback_with(&df, omega)?;
        let lhs = comass_covector(&pulled, &settings).value;
        let rhs = df.frame_norm().powi(k) * comass_covector(&omega.eval(&df.concatenated()), &settings).value;
        if lhs > 0.0 {
            worst = worst.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }
    let mut report = CheckReport::new("pullback_estimate", "lemma-pullback-estimate");
    report.n_samples = points.len() as u64;
    report.excluded = excluded;
    report.max_ratio = worst;
    report.threshold("max_ratio", 1.0 + 1e-9);
    report.pass = worst <= 1.0 + 1e-9;
    Ok(report)
}

/// `⟦f₀, f₁⟧^*(ω₀ ⊗ ω₁) = f₀^*ω₀ ∧ f₁^*ω₁` for random affine multi-valued
/// maps `R^m → A_{d_i}(R^n)` and random symmetrized polynomial forms.
pub fn split_pullback_check(trials: usize, points: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    use crate::forms::{random_poly_form, symmetrize, tensor_product, GroupAction};
    use crate::numeric::rng_stream;
    use crate::region::Region;
    use nalgebra::DMatrix;
    use rand::Rng;

    let mut worst: f64 = 0.0;
    let mut count = 0u64;
    for t in 0..trials {
        let mut rng = rng_stream(seed, t as u64);
        let (m, n) = (3, 2);
        let (d0, d1) = (rng.random_range(1..=3), rng.random_range(1..=2));
        let (k0, k1) = if t % 2 == 0 { (1, 1) } else { (1, 2) };
        let mut map = |d: usize| -> Result<MultiValuedMap> {
            let a = (0..d).map(|_| DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))).collect();
            let b = (0..d).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            MultiValuedMap::affine_branches(Region::unit_box(m), a, b)
        };
        let (f0, f1) = (map(d0)?, map(d1)?);
        let w0 = KForm::from_poly(n, d0, random_poly_form(&mut rng, n * d0, k0, 3), Invariance::None)?;
        let w1 = KForm::from_poly(n, d1, random_poly_form(&mut rng, n * d1, k1, 3), Invariance::None)?;
        let w0 = symmetrize(&w0, &GroupAction::full(n, d0)?)?;
        let w1 = symmetrize(&w1, &GroupAction::full(n, d1)?)?;
        let omega = tensor_product(&w0, &w1)?;
        for _ in 0..points {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let lhs = pullback_split(&f0, &f1, &omega, &x, 1e-6)?.value;
            let rhs = pullback(&f0, &w0, &x, 1e-6)?.value.wedge(&pullback(&f1, &w1, &x, 1e-6)?.value)?;
            let scale = 1.0 + rhs.terms().values().fold(0.0f64, |a, c| a.max(c.abs()));
            worst = worst.max(lhs.max_abs_diff(&rhs) / scale);
            count += 1;
        }
    }
    let mut report = CheckReport::new("split_pullback", "lemma-pullback-decomposition");
    report.n_samples = count;
    report.max_ratio = f64::NAN;
    report.metric("max_relative_defect", worst);
    report.threshold("max_relative_defect", tol);
    report.pass = worst <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::BranchedCover;
    use crate::forms::natural_form;
    use crate::region::Region;
    use nalgebra::DMatrix;

    #[test]
    fn split_pullback_matches_the_wedge() {
        let rep = split_pullback_check(4, 20, 3, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn star_of_pulled_back_natural_form() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.5, 2.0)).unwrap();
        let s = pullback(&f, &natural_form(2, 2), &[1.0, 0.0], 1e-5).unwrap();
        assert!((hodge_star_top(&s.value).unwrap() - 0.5).abs() < 1e-15);
        for d in 2..5u32 {
            let f = MultiValuedMap::inverse_of(&BranchedCover::power(d), Region::annulus(0.5, 2.0)).unwrap();
            let y = [0.3, 0.9];
            let s = pullback(&f, &natural_form(2, d as usize), &y, 1e-5).unwrap();
            // Σ_j |g_j'(y)|² with |g_j'| = |y|^{1/d − 1}/d
            let r = (0.3f64 * 0.3 + 0.81).sqrt();
            let expected = d as f64 * (r.powf(1.0 / d as f64 - 1.0) / d as f64).powi(2);
            assert!((hodge_star_top(&s.value).unwrap() - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn hodge_star_basics() {
        assert_eq!(hodge_star_top(&KCovector::volume(3)).unwrap(), 1.0);
        assert_eq!(hodge_star_top(&KCovector::volume(2).scale(-2.5)).unwrap(), -2.5);
        assert!(hodge_star_top(&KCovector::elementary(3, &[0, 1], 1.0).unwrap()).is_err());
    }

    #[test]
    fn single_valued_pullback_is_classical() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let f = MultiValuedMap::affine_branches(Region::unit_box(2), vec![a.clone()], vec![vec![0.0, 0.0]]).unwrap();
        let s = pullback(&f, &natural_form(2, 1), &[0.5, 0.5], 1e-5).unwrap();
        assert!((hodge_star_top(&s.value).unwrap() - a.determinant()).abs() < 1e-14);
    }

    #[test]
    fn non_invariant_forms_are_rejected() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.5, 2.0)).unwrap();
        let w = natural_form(2, 2).with_invariance(Invariance::None);
        assert!(matches!(pullback(&f, &w, &[1.0, 0.0], 1e-5), Err(Error::FormMismatch(_))));
        let w = natural_form(2, 3);
        assert!(pullback(&f, &w, &[1.0, 0.0], 1e-5).is_err());
    }

    #[test]
    fn pullback_estimate_holds_for_square_root() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(3), Region::annulus(0.5, 2.0)).unwrap();
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![0.6 + 0.05 * i as f64, 0.3 - 0.02 * i as f64]).collect();
        let rep = pullback_estimate_check(&f, &natural_form(2, 3), &pts, 1e-5).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
