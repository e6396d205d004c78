use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::differential::differential;
use super::map::MultiValuedMap;
use super::pullback::{hodge_star_top, pullback_with};
use crate::covers::BranchedCover;
use crate::error::{Error, Result};
use crate::forms::natural_form;
use crate::numeric::rng_stream;
use crate::region::Region;
use crate::report::{CheckReport, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrCurveSettings {
    pub samples: usize,
    pub seed: u64,
    /// PASS iff the largest ratio is at most `1 + tol`.
    pub tol: f64,
    /// Samples closer than `exclusion · diam(region)` to a branch value are
    /// skipped.
    pub exclusion: f64,
    pub bins: usize,
}

impl Default for QrCurveSettings {
    fn default() -> Self {
        QrCurveSettings { samples: 10_000, seed: 7, tol: 1e-9, exclusion: 1e-3, bins: 20 }
    }
}

/// The ratio `|D minv f|ⁿ / (d^{n/2−1} K_I ⋆(minv f)^*ω_n)` at one regular
/// value `y`.
pub fn qr_ratio(f: &MultiValuedMap, k_inner: f64, y: &[f64]) -> Result<f64> {
    let (n, d) = (f.n(), f.d());
    let omega = natural_form(n, d);
    let df = differential(f, y, 1e-6)?;
    let star = hodge_star_top(&pullback_with(&df, &omega)?)?;
    let lhs = df.frame_norm().powi(n as i32);
    let rhs = (d as f64).powf(n as f64 / 2.0 - 1.0) * k_inner * star;
    if !(rhs > 0.0) {
        return Err(Error::Numerical(format!("⋆ minv f^*ω_n = {star} is not positive at {y:?}")));
    }
    Ok(lhs / rhs)
}

/// Samples the quasiregular-curve inequality
/// `‖ω_n‖ |D minv f|ⁿ ≤ d^{n/2−1} K_I ⋆ minv f^*ω_n` on `region`.
pub fn qr_curve_check(cover: &BranchedCover, region: &Region, settings: &QrCurveSettings) -> Result<CheckReport> {
    region.validate()?;
    if region.dim() != cover.n() {
        return Err(Error::DimensionMismatch { expected: cover.n(), got: region.dim() });
    }
    let f = MultiValuedMap::inverse_of(cover, region.clone())?;
    let k_inner = cover.k_inner();
    let margin = settings.exclusion * region.diameter();
    let branch = cover.branch_values()?;
    let outcomes: Vec<Option<f64>> = (0..settings.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(settings.seed, i as u64);
            let y = region.sample(&mut rng);
            if branch.distance(&y) < margin || !cover.in_image(&y) {
                return Ok(None);
            }
            match qr_ratio(&f, k_inner, &y) {
                Ok(r) => Ok(Some(r)),
                Err(Error::SingularH(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let excluded = (outcomes.len() - ratios.len()) as u64;
    let mut report = CheckReport::new("qr_curve", "thm-qr-curve");
    report.n_samples = ratios.len() as u64;
    report.excluded = excluded;
    if ratios.is_empty() {
        report.note("every sample was excluded");
        return Ok(report);
    }
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    report.max_ratio = max;
    report.metric("min_ratio", min).metric("mean_ratio", mean).metric("k_inner", k_inner);
    report.metric("exclusion_radius", margin);
    report.threshold("max_ratio", 1.0 + settings.tol);
    if !cover.distortion_is_exact() {
        report.note("K_I is an upper bound for this map, not the exact distortion");
    }
    report.table = Some(histogram(&ratios, min, max, settings.bins.max(1)));
    report.pass = max <= 1.0 + settings.tol;
    Ok(report)
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Table {
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Table {
        columns: vec!["bin_lo".into(), "bin_hi".into(), "count".into()],
        rows: counts
            .iter()
            .enumerate()
            .map(|(b, c)| vec![lo + b as f64 * width, lo + (b + 1) as f64 * width, *c as f64])
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::CatalogMap;
    use nalgebra::DMatrix;

    #[test]
    fn powers_are_sharp() {
        let settings = QrCurveSettings { samples: 500, ..Default::default() };
        for d in 1..5u32 {
            let rep = qr_curve_check(&BranchedCover::power(d), &Region::annulus(0.0, 2.0), &settings).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!((rep.metrics["min_ratio"] - 1.0).abs() < 1e-9);
            assert_eq!(rep.n_samples + rep.excluded, 500);
        }
    }

    #[test]
    fn affine_precomposition_stays_below_one() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.0, 1.0]);
        let cover = BranchedCover::new(CatalogMap::Precomposed {
            a,
            b: vec![0.1, 0.0],
            base: Box::new(CatalogMap::PlanarPower(3)),
        })
        .unwrap();
        let settings = QrCurveSettings { samples: 500, tol: 1e-6, ..Default::default() };
        let rep = qr_curve_check(&cover, &Region::Ball { center: vec![0.0, 0.0], radius: 1.5 }, &settings).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["min_ratio"] < 1.0);
    }

    #[test]
    fn winding_map_in_three_dimensions() {
        let cover = BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap();
        let region = Region::Box { lo: vec![-1.0, -1.0, -1.0], hi: vec![1.0, 1.0, 1.0] };
        let rep = qr_curve_check(&cover, &region, &QrCurveSettings { samples: 300, tol: 1e-9, ..Default::default() })
            .unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
