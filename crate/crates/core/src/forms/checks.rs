//! Sampled checks of the comass of `ω_n` and of the properties of the
//! symmetrization `P_Γ`.

use rand::Rng;
use rayon::prelude::*;

use super::comass::{comass, ComassSettings};
use super::covector::subsets;
use super::form::{natural_form, symmetrize, trace_form, KForm};
use super::group::{GroupAction, Invariance};
use super::poly::{PolyForm, Polynomial};
use crate::error::Result;
use crate::numeric::rng_stream;
use crate::report::CheckReport;

/// A random polynomial of degree at most 2 with `terms` monomials.
pub fn random_polynomial(rng: &mut impl Rng, nvars: usize, terms: usize) -> Polynomial {
    let mut p = Polynomial::constant(nvars, rng.random_range(-1.0..1.0));
    for _ in 0..terms {
        let mut pow = vec![0u32; nvars];
        for _ in 0..rng.random_range(1..=2) {
            pow[rng.random_range(0..nvars)] += 1;
        }
        p = p.add(&Polynomial::monomial(nvars, pow, rng.random_range(-1.0..1.0)));
    }
    p
}

/// A random polynomial-coefficient `k`-form on `R^dim` with `terms`
/// elementary components.
pub fn random_poly_form(rng: &mut impl Rng, dim: usize, k: usize, terms: usize) -> PolyForm {
    let all = subsets(dim, k);
    let mut form = PolyForm::zero(dim, k);
    for _ in 0..terms.max(1) {
        let idx = &all[rng.random_range(0..all.len())];
        let p = random_polynomial(rng, dim, 2);
        form = form.add(&PolyForm::term(dim, idx, p).expect("valid indices")).expect("same space");
    }
    form
}

fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `‖ω_n‖ = 1` at random points of `(R^n)^d`, and the witness frame
/// `v_l = (e_l, 0, …, 0)` attains it.
pub fn natural_comass_check(shapes: &[(usize, usize)], points: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let settings = ComassSettings::default();
    let mut worst: f64 = 0.0;
    let mut witness_gap: f64 = 0.0;
    let mut unconverged = 0;
    let mut samples = 0;
    for (s, &(n, d)) in shapes.iter().enumerate() {
        let omega = natural_form(n, d);
        let dim = n * d;
        let frame: Vec<Vec<f64>> = (0..n)
            .map(|l| {
                let mut v = vec![0.0; dim];
                v[l] = 1.0;
                v
            })
            .collect();
        for i in 0..points {
            let x = random_point(&mut rng_stream(seed, (s * points + i) as u64), dim);
            let r = comass(&omega, &x, &settings);
            worst = worst.max((r.value - 1.0).abs());
            witness_gap = witness_gap.max((omega.eval_on(&x, &frame) - 1.0).abs());
            unconverged += usize::from(!r.converged);
            samples += 1;
        }
    }
    let mut report = CheckReport::new("comass_natural_form", "lemma-comass-natural");
    report.n_samples = samples as u64;
    report.max_ratio = 1.0 + worst;
    report
        .metric("max_deviation", worst)
        .metric("witness_gap", witness_gap)
        .metric("unconverged", unconverged as f64);
    report.threshold("max_deviation", tol);
    report.pass = worst <= tol && witness_gap <= 1e-15;
    Ok(report)
}

fn sup_comass(form: &KForm, points: &[Vec<f64>], settings: &ComassSettings) -> f64 {
    points.par_iter().map(|x| comass(form, x, settings).value).reduce(|| 0.0, f64::max)
}

fn max_diff(a: &KForm, b: &KForm, points: &[Vec<f64>]) -> f64 {
    points.iter().map(|x| a.eval(x).max_abs_diff(&b.eval(x))).fold(0.0, f64::max)
}

/// Properties of `P_Γ` for `Γ = S_d` on random polynomial forms of degree 1
/// and 2: invariance, idempotence, `P_Γ ω = ω` for trace forms, linearity,
/// `P_Γ dω = d P_Γ ω` (finite differences against the exact derivative) and
/// `‖P_Γ ω‖_∞ ≤ ‖ω‖_∞` over a `Γ`-invariant point set.
pub fn symmetrization_check(n: usize, d: usize, trials: usize, points: usize, seed: u64) -> Result<CheckReport> {
    let action = GroupAction::full(n, d)?;
    let dim = n * d;
    let settings = ComassSettings::default();
    let mut rng = rng_stream(seed, u64::MAX);
    // comass is invariant under the isometric action, so an orbit-closed
    // point set makes the sampled sup norms comparable
    let mut pts = Vec::new();
    for _ in 0..points {
        let x = random_point(&mut rng, dim);
        for sigma in action.elements() {
            pts.push(action.act(sigma, &x));
        }
    }
    let mut invariance: f64 = 0.0;
    let mut idempotence: f64 = 0.0;
    let mut fixed: f64 = 0.0;
    let mut linearity: f64 = 0.0;
    let mut commutes: f64 = 0.0;
    let mut expansion: f64 = 0.0;
    for t in 0..trials {
        let k = 1 + t % 2;
        let a = random_poly_form(&mut rng, dim, k, 3);
        let b = random_poly_form(&mut rng, dim, k, 3);
        let wa = KForm::from_poly(n, d, a.clone(), Invariance::None)?;
        let wb = KForm::from_poly(n, d, b, Invariance::None)?;
        let pa = symmetrize(&wa, &action)?;
        let pb = symmetrize(&wb, &action)?;
        invariance = invariance.max(pa.invariance_defect(&action, &pts[..points.min(pts.len())]));
        idempotence = idempotence.max(max_diff(&symmetrize(&pa, &action)?, &pa, &pts));
        let (ca, cb) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let combo = symmetrize(&KForm::linear_combination(ca, &wa, cb, &wb)?, &action)?;
        linearity = linearity.max(max_diff(&combo, &KForm::linear_combination(ca, &pa, cb, &pb)?, &pts));
        let exact = symmetrize(&KForm::from_poly(n, d, a.d(), Invariance::None)?, &action)?;
        let fd = symmetrize(&wa.clone().without_derivative(), &action)?.exterior_derivative(1e-3);
        commutes = commutes.max(max_diff(&fd, &exact, &pts));
        let alpha = KForm::from_poly(n, 1, random_poly_form(&mut rng, n, k.min(n), 2), Invariance::None)?;
        let tr = trace_form(&alpha, d)?;
        fixed = fixed.max(max_diff(&symmetrize(&tr, &action)?, &tr, &pts));
        let sup_p = sup_comass(&pa, &pts, &settings);
        let sup_w = sup_comass(&wa, &pts, &settings);
        if sup_w > 0.0 {
            expansion = expansion.max(sup_p / sup_w);
        }
    }
    let mut report = CheckReport::new("symmetrization", "lemma-proj-invariant");
    report.n_samples = (trials * pts.len()) as u64;
    report.max_ratio = expansion;
    report
        .metric("invariance_defect", invariance)
        .metric("idempotence_defect", idempotence)
        .metric("trace_fixed_defect", fixed)
        .metric("linearity_defect", linearity)
        .metric("derivative_commutation", commutes)
        .metric("sup_norm_ratio", expansion);
    report
        .threshold("algebraic", 1e-12)
        .threshold("derivative_commutation", 1e-6)
        .threshold("sup_norm_ratio", 1.0 + 1e-12);
    report.pass = invariance <= 1e-12
        && idempotence <= 1e-12
        && fixed <= 1e-12
        && linearity <= 1e-12
        && commutes <= 1e-6
        && expansion <= 1.0 + 1e-12;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comass_of_natural_form() {
        let rep = natural_comass_check(&[(2, 2), (2, 3), (3, 2)], 3, 1, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn symmetrization_properties() {
        for (n, d) in [(1, 3), (2, 2)] {
            let rep = symmetrization_check(n, d, 4, 10, 5).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }
}
