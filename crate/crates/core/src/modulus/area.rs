use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{BranchedCover, CatalogMap};
use crate::error::{Error, Result};
use crate::numeric::{composite_gauss_legendre, op_norm};
use crate::region::Region;
use crate::report::CheckReport;

/// Test integrands `g` for the area formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarField {
    One,
    /// `|x|²`.
    NormSquared,
    /// `exp(−|x|²)`.
    Gaussian,
    /// `‖Df(x)‖^{−n}`.
    InvDfPow,
}

impl ScalarField {
    fn eval(&self, cover: &BranchedCover, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            ScalarField::One => 1.0,
            ScalarField::NormSquared => r2,
            ScalarField::Gaussian => (-r2).exp(),
            ScalarField::InvDfPow => {
                let df = cover.differential(x).expect("dimension checked");
                op_norm(&df).powi(-(cover.n() as i32))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaSettings {
    /// Gauss–Legendre nodes per radial panel.
    pub radial_order: usize,
    pub radial_panels: usize,
    /// Trapezoid nodes in the angle (spectrally accurate for periodic data).
    pub angular: usize,
    pub tol: f64,
}

impl Default for AreaSettings {
    fn default() -> Self {
        AreaSettings { radial_order: 24, radial_panels: 4, angular: 256, tol: 1e-3 }
    }
}

/// The preimage of a centred annulus, in polar coordinates `w`:
/// `f⁻¹E = {φ(w): inner < |w| < outer}` with `dx = jac · dw`.
struct PreimageChart {
    inner: f64,
    outer: f64,
    a_inv: Option<DMatrix<f64>>,
    b: Vec<f64>,
    jac: f64,
}

impl PreimageChart {
    fn point(&self, w: [f64; 2]) -> Vec<f64> {
        match &self.a_inv {
            None => w.to_vec(),
            Some(a) => {
                let u = [w[0] - self.b[0], w[1] - self.b[1]];
                vec![a[(0, 0)] * u[0] + a[(0, 1)] * u[1], a[(1, 0)] * u[0] + a[(1, 1)] * u[1]]
            }
        }
    }
}

fn chart(map: &CatalogMap, inner: f64, outer: f64) -> Result<PreimageChart> {
    match map {
        CatalogMap::PlanarPower(k) => {
            let e = 1.0 / *k as f64;
            Ok(PreimageChart { inner: inner.powf(e), outer: outer.powf(e), a_inv: None, b: vec![0.0; 2], jac: 1.0 })
        }
        CatalogMap::Precomposed { a, b, base } if matches!(**base, CatalogMap::PlanarPower(_)) => {
            let inner_chart = chart(base, inner, outer)?;
            let a_inv = a.clone().try_inverse().ok_or_else(|| Error::Numerical("singular affine map".into()))?;
            Ok(PreimageChart { a_inv: Some(a_inv), b: b.clone(), jac: 1.0 / a.determinant(), ..inner_chart })
        }
        _ => Err(Error::Unsupported(
            "explicit preimages of annuli are available for z ↦ z^k and its affine precompositions".into(),
        )),
    }
}

fn centred_annulus(region: &Region) -> Result<(f64, f64)> {
    match region {
        Region::Annulus { center, inner, outer } if center == &[0.0, 0.0] => Ok((*inner, *outer)),
        Region::Ball { center, radius } if center.iter().all(|c| *c == 0.0) && center.len() == 2 => Ok((0.0, *radius)),
        _ => Err(Error::Unsupported("the region must be a disk or annulus centred at the branch value 0".into())),
    }
}

/// `∫ h` over `{inner < |w| < outer}` by Gauss–Legendre in `r` and the
/// trapezoid rule in `θ`.
fn polar_integral(inner: f64, outer: f64, s: &AreaSettings, h: impl Fn([f64; 2]) -> Result<f64> + Sync) -> Result<f64> {
    let radial = composite_gauss_legendre(s.radial_order, s.radial_panels, inner, outer);
    let dt = 2.0 * PI / s.angular as f64;
    radial
        .par_iter()
        .map(|&(r, wr)| {
            let mut acc = 0.0;
            for i in 0..s.angular {
                let t = (i as f64 + 0.5) * dt;
                acc += h([r * t.cos(), r * t.sin()])?;
            }
            Ok(acc * dt * r * wr)
        })
        .collect::<Result<Vec<f64>>>()
        // summed in node order so the result does not depend on scheduling
        .map(|parts| parts.iter().sum())
}

fn prepare(cover: &BranchedCover, region: &Region) -> Result<(f64, f64, PreimageChart)> {
    region.validate()?;
    let (inner, outer) = centred_annulus(region)?;
    if let Some(r) = cover.image_radius() {
        if outer >= r {
            return Err(Error::OutsideImage(vec![outer, 0.0]));
        }
    }
    let ch = chart(cover.map(), inner, outer)?;
    Ok((inner, outer, ch))
}

/// `∫_E f_*g dy = ∫_{f⁻¹E} g 𝐉f dx` for a centred disk or annulus `E`.
pub fn area_formula_check(
    cover: &BranchedCover,
    g: ScalarField,
    region: &Region,
    settings: &AreaSettings,
) -> Result<CheckReport> {
    let (inner, outer, ch) = prepare(cover, region)?;
    let lhs = polar_integral(inner, outer, settings, |y| cover.push_forward(|x| g.eval(cover, x), &y))?;
    let rhs = polar_integral(ch.inner, ch.outer, settings, |w| {
        let x = ch.point(w);
        Ok(g.eval(cover, &x) * cover.jacobian(&x)? * ch.jac)
    })?;
    let preimage_volume = polar_integral(ch.inner, ch.outer, settings, |_| Ok(ch.jac))?;
    let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    let mut report = CheckReport::new("area_formula", "lemma-co-area");
    report.n_samples = (settings.radial_order * settings.radial_panels * settings.angular) as u64;
    report.max_ratio = lhs / rhs;
    report
        .metric("lhs", lhs)
        .metric("rhs", rhs)
        .metric("relative_discrepancy", rel)
        .metric("region_volume", region.volume())
        .metric("preimage_volume", preimage_volume);
    report.threshold("relative_discrepancy", settings.tol);
    report.pass = rel < settings.tol;
    Ok(report)
}

/// Energy bounds on `E`: `∫_E Hⁿ ≤ d^{n/2−1}|f⁻¹E|` and
/// `∫_E |D minv f|ⁿ ≤ d^{n/2−1} K_I K_O |f⁻¹E|`, with the frame norm
/// `|D minv f|² = Σ_j ‖Df(x_j)⁻¹‖²`.
pub fn energy_bound_check(cover: &BranchedCover, region: &Region, settings: &AreaSettings) -> Result<CheckReport> {
    let (inner, outer, ch) = prepare(cover, region)?;
    let n = cover.n() as i32;
    let d = cover.degree() as f64;
    let (ki, ko) = cover.distortion();
    let h_energy = polar_integral(inner, outer, settings, |y| Ok(cover.h_function(&y)?.powi(n)))?;
    let frame_energy = polar_integral(inner, outer, settings, |y| {
        let s: f64 = cover.branches(&y)?.iter().map(|(_, l)| op_norm(l).powi(2)).sum();
        Ok(s.powf(n as f64 / 2.0))
    })?;
    let volume = polar_integral(ch.inner, ch.outer, settings, |_| Ok(ch.jac))?;
    let bound_h = d.powf(n as f64 / 2.0 - 1.0) * volume;
    let bound_frame = bound_h * ki * ko;
    let tol = settings.tol;
    let mut report = CheckReport::new("energy_bound", "cor-sobolev-energy");
    report.n_samples = (settings.radial_order * settings.radial_panels * settings.angular) as u64;
    report.max_ratio = (h_energy / bound_h).max(frame_energy / bound_frame);
    report
        .metric("h_energy", h_energy)
        .metric("h_bound", bound_h)
        .metric("h_slack", 1.0 - h_energy / bound_h)
        .metric("frame_energy", frame_energy)
        .metric("frame_bound", bound_frame)
        .metric("frame_slack", 1.0 - frame_energy / bound_frame)
        .metric("preimage_volume", volume);
    report.threshold("ratio", 1.0 + tol);
    report.pass = h_energy <= bound_h * (1.0 + tol) && frame_energy <= bound_frame * (1.0 + tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus() -> Region {
        Region::Annulus { center: [0.0, 0.0], inner: 0.5, outer: 2.0 }
    }

    #[test]
    fn constant_integrand_counts_sheets() {
        for k in 1..=4 {
            let rep = area_formula_check(&BranchedCover::power(k), ScalarField::One, &annulus(), &Default::default())
                .unwrap();
            assert!(rep.pass, "{rep:?}");
            let exact = k as f64 * PI * (4.0 - 0.25);
            assert!((rep.metrics["lhs"] / exact - 1.0).abs() < 1e-12);
            assert!(rep.metrics["relative_discrepancy"] < 1e-10);
        }
    }

    #[test]
    fn all_fields_on_affine_precomposition() {
        let cover = BranchedCover::new(CatalogMap::Precomposed {
            a: DMatrix::from_row_slice(2, 2, &[1.3, 0.4, -0.2, 0.9]),
            b: vec![0.2, 0.1],
            base: Box::new(CatalogMap::PlanarPower(2)),
        })
        .unwrap();
        for g in [ScalarField::One, ScalarField::NormSquared, ScalarField::Gaussian, ScalarField::InvDfPow] {
            let rep = area_formula_check(&cover, g, &annulus(), &Default::default()).unwrap();
            assert!(rep.pass, "{g:?} {rep:?}");
        }
    }

    #[test]
    fn energy_identity_for_powers() {
        let rep = energy_bound_check(&BranchedCover::power(3), &annulus(), &Default::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["h_slack"].abs() < 1e-8);
        let vol = PI * (2f64.powf(2.0 / 3.0) - 0.5f64.powf(2.0 / 3.0));
        assert!((rep.metrics["preimage_volume"] / vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_regions_and_maps() {
        let off = Region::Ball { center: vec![1.0, 0.0], radius: 0.5 };
        assert!(area_formula_check(&BranchedCover::power(2), ScalarField::One, &off, &Default::default()).is_err());
        let wind = BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap();
        assert!(matches!(
            area_formula_check(&wind, ScalarField::One, &annulus(), &Default::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
