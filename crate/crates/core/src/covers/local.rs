//! Sampled checks of the local structure of `minv f`: continuity, the
//! normal-neighbourhood bound, and pseudomonotonicity.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::catalog::{BranchedCover, CatalogMap};
use crate::almgren::{distance_value, AlmgrenPoint};
use crate::error::{Error, Result};
use crate::numeric::dist;
use crate::report::CheckReport;

/// `m` roughly uniform unit vectors in `R^n` (`n = 2, 3`).
pub(crate) fn sphere_points(n: usize, m: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // spherical Fibonacci lattice
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                    let s = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![s * t.cos(), s * t.sin(), z]
                })
                .collect()
        }
    }
}

fn offset(y: &[f64], r: f64, u: &[f64]) -> Vec<f64> {
    y.iter().zip(u).map(|(a, b)| a + r * b).collect()
}

fn power_exponent(f: &BranchedCover) -> Option<u32> {
    match f.map() {
        CatalogMap::PlanarPower(k) => Some(*k),
        _ => None,
    }
}

/// Boundary of the normal neighbourhood `U_f(x, r)`, the component of
/// `f⁻¹(B(f(x), r))` containing `x`, sampled at `m` points per boundary
/// circle. Available for `z ↦ z^k` only.
///
/// For `r ≤ |f(x)|` the disk misses the branch value and the component is
/// the image of the disk under the branch `w ↦ x·(w/y)^{1/k}`; otherwise the
/// preimage is connected and the boundary is the full preimage circle.
pub fn normal_neighbourhood_boundary(f: &BranchedCover, x: &[f64], r: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    let k = power_exponent(f)
        .ok_or_else(|| Error::Unsupported("normal neighbourhoods are only available for z ↦ z^k".into()))?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let y = f.eval(x)?;
    let yc = Complex64::new(y[0], y[1]);
    let xc = Complex64::new(x[0], x[1]);
    let circle = sphere_points(2, m);
    let mut out = Vec::new();
    if r <= yc.norm() {
        for u in &circle {
            let w = yc + r * Complex64::new(u[0], u[1]);
            let z = xc * (w / yc).powf(1.0 / k as f64);
            out.push(vec![z.re, z.im]);
        }
    } else {
        for u in &circle {
            let w = offset(&y, r, u);
            out.extend(f.minv(&w)?.expand());
        }
    }
    Ok(out)
}

fn diameter_by(points: &[AlmgrenPoint]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(distance_value(&points[i], &points[j])?);
        }
    }
    Ok(best)
}

fn euclidean_diameter(points: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(dist(&points[i], &points[j]));
        }
    }
    best
}

/// Continuity of `minv f` at `y` along `radii` shrinking radii
/// `r_i = r₀·2^{-i}`: the sampled modulus of continuity
/// `D(r) = max_{|u|=1} d_A(minv f(y + r u), minv f(y))` must decrease to zero.
/// For `z ↦ z^k` it is also checked against `D(r)² ≤ d·max diam U_f(x, r)²`.
pub fn continuity_check(f: &BranchedCover, y: &[f64], r0: f64, radii: usize, directions: usize) -> Result<CheckReport> {
    let base = f.minv(y)?;
    let d = f.degree() as f64;
    let dirs = sphere_points(f.n(), directions);
    let mut report = CheckReport::new("continuity", "lemma-homeo");
    let mut moduli = Vec::with_capacity(radii);
    let mut rows = Vec::with_capacity(radii);
    let mut monotone = true;
    let mut bound_ok = true;
    let mut worst_bound_ratio: f64 = 0.0;
    for i in 0..radii {
        let r = r0 * 0.5f64.powi(i as i32);
        let mut modulus: f64 = 0.0;
        for u in &dirs {
            let q = f.minv(&offset(y, r, u))?;
            modulus = modulus.max(distance_value(&q, &base)?);
        }
        if let Some(prev) = moduli.last() {
            if modulus > prev * (1.0 + 1e-9) + 1e-12 {
                monotone = false;
            }
        }
        let mut bound = f64::NAN;
        if power_exponent(f).is_some() {
            let mut diam: f64 = 0.0;
            for e in base.entries() {
                diam = diam.max(euclidean_diameter(&normal_neighbourhood_boundary(f, &e.x, r, 256)?));
            }
            bound = (d * diam * diam).sqrt();
            let ratio = modulus / bound;
            worst_bound_ratio = worst_bound_ratio.max(ratio);
            if ratio > 1.0 + 1e-9 {
                bound_ok = false;
            }
        }
        moduli.push(modulus);
        rows.push(vec![r, modulus, bound]);
    }
    let last = *moduli.last().unwrap_or(&0.0);
    report.n_samples = (radii * dirs.len()) as u64;
    report.max_ratio = worst_bound_ratio;
    report.metric("final_modulus", last);
    report.metric("initial_modulus", moduli.first().copied().unwrap_or(0.0));
    report.metric("monotone", if monotone { 1.0 } else { 0.0 });
    report.threshold("relative_noise", 1e-9);
    if power_exponent(f).is_some() {
        report.metric("max_modulus_over_neighbourhood_bound", worst_bound_ratio);
        report.threshold("neighbourhood_bound", 1.0);
    } else {
        report.note("normal-neighbourhood bound not evaluated: U_f is only explicit for z ↦ z^k");
    }
    report.table = Some(crate::report::Table {
        columns: vec!["radius".into(), "modulus".into(), "neighbourhood_bound".into()],
        rows,
    });
    report.pass = monotone && bound_ok && last <= moduli.first().copied().unwrap_or(0.0);
    Ok(report)
}

/// Pseudomonotonicity of `F = minv f` on `B(y, r)`:
/// `diam F(B(y, r)) ≤ √d · diam F(∂B(y, r))`, with both diameters taken in
/// the assignment metric over sampled points (`rings` interior spheres and
/// `m` points per sphere).
pub fn pseudomonotone_check(f: &BranchedCover, y: &[f64], r: f64, rings: usize, m: usize) -> Result<CheckReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let dirs = sphere_points(f.n(), m);
    let boundary: Vec<AlmgrenPoint> = dirs.iter().map(|u| f.minv(&offset(y, r, u))).collect::<Result<_>>()?;
    let mut interior = vec![f.minv(y)?];
    for i in 1..=rings {
        let rho = r * i as f64 / (rings + 1) as f64;
        for u in &dirs {
            interior.push(f.minv(&offset(y, rho, u))?);
        }
    }
    interior.extend(boundary.iter().cloned());
    let diam_ball = diameter_by(&interior)?;
    let diam_boundary = diameter_by(&boundary)?;
    let sqrt_d = (f.degree() as f64).sqrt();
    let ratio = if diam_boundary > 0.0 { diam_ball / diam_boundary } else { f64::INFINITY };
    let mut report = CheckReport::new("pseudomonotone", "lemma-pseudomonotone");
    report.n_samples = interior.len() as u64;
    report.max_ratio = ratio;
    report.metric("diam_ball", diam_ball);
    report.metric("diam_boundary", diam_boundary);
    report.threshold("sqrt_degree", sqrt_d);
    report.pass = diam_ball <= sqrt_d * diam_boundary * (1.0 + 1e-9) + 1e-12;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbourhood_away_from_branch_value() {
        let f = BranchedCover::power(2);
        let x = [1.0, 0.0];
        let b = normal_neighbourhood_boundary(&f, &x, 0.5, 64).unwrap();
        assert_eq!(b.len(), 64);
        for p in &b {
            let w = f.eval(p).unwrap();
            assert!((dist(&w, &[1.0, 0.0]) - 0.5).abs() < 1e-12);
            assert!(p[0] > 0.0);
        }
        let all = normal_neighbourhood_boundary(&f, &x, 2.0, 16).unwrap();
        assert_eq!(all.len(), 32);
        assert!(normal_neighbourhood_boundary(&BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap(), &[1.0, 0.0, 0.0], 0.1, 8).is_err());
    }

    #[test]
    fn minv_is_continuous() {
        for (k, y) in [(2u32, vec![1.0, 0.0]), (3, vec![0.0, 0.0]), (3, vec![0.2, -0.4])] {
            let f = BranchedCover::power(k);
            let rep = continuity_check(&f, &y, 0.1, 20, 16).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.metrics["final_modulus"] < 0.02 * rep.metrics["initial_modulus"]);
        }
        let w = BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap();
        assert!(continuity_check(&w, &[0.0, 0.0, 1.0], 0.1, 10, 20).unwrap().pass);
    }

    #[test]
    fn power_maps_are_pseudomonotone() {
        for k in 2..5u32 {
            let f = BranchedCover::power(k);
            for (y, r) in [(vec![1.0, 0.0], 0.3), (vec![0.0, 0.0], 0.5), (vec![0.1, 0.1], 0.5)] {
                let rep = pseudomonotone_check(&f, &y, r, 4, 48).unwrap();
                assert!(rep.pass, "k={k} {rep:?}");
            }
        }
    }
}
