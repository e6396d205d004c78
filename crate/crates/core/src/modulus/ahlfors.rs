use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::almgren::{distance_value, AlmgrenPoint};
use crate::covers::{BranchedCover, CatalogMap};
use crate::error::{Error, Result};
use crate::numeric::{norm, op_norm, rng_stream, unit_ball_volume, RunningStats};
use crate::report::{CheckReport, Table};

/// Monte Carlo estimate of `Hⁿ(B_{Ω_f}(z, r))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaFSample {
    /// `y₀` with `z = minv f(y₀)`.
    pub base_point: Vec<f64>,
    pub center: AlmgrenPoint,
    pub radius: f64,
    pub estimate: f64,
    pub std_err: f64,
    /// 95% confidence half-width.
    pub half_width: f64,
    /// `estimate / (ω_n d^{n/2} K_I K_O rⁿ)`.
    pub ratio: f64,
    pub ratio_std_err: f64,
    /// Radius of the ball of `f(Ω)` that was sampled.
    pub sampling_radius: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhlforsSettings {
    pub samples: usize,
    pub seed: u64,
    /// Relative standard error above which an estimate is flagged.
    pub precision: f64,
}

impl Default for AhlforsSettings {
    fn default() -> Self {
        AhlforsSettings { samples: 100_000, seed: 7, precision: 0.05 }
    }
}

/// A radius `R` with `f(B(x, r)) ⊂ B(f(x), R)`, from a bound on `‖Df‖`
/// over `B(x, r)`.
fn image_radius_bound(map: &CatalogMap, x: &[f64], r: f64) -> f64 {
    match map {
        CatalogMap::PlanarPower(k) => {
            let k = *k as f64;
            k * (norm(x) + r).powf(k - 1.0) * r
        }
        CatalogMap::WindingMap3D(k) => *k as f64 * r,
        CatalogMap::ComplexPolynomial(c) => {
            let s = norm(x) + r;
            c.iter().enumerate().skip(1).map(|(i, ci)| ci.norm() * i as f64 * s.powi(i as i32 - 1)).sum::<f64>() * r
        }
        CatalogMap::Precomposed { a, b, base } => {
            let u: Vec<f64> = (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum::<f64>() + b[i]).collect();
            image_radius_bound(base, &u, op_norm(a) * r)
        }
    }
}

/// `Hⁿ(B_{Ω_f}(minv f(y₀), r))` by the area formula:
/// `∫ 1{d_A(minv f(y), z) < r} 𝐉 minv f(y) dy`, sampled uniformly on a
/// ball `B(y₀, R)` that contains `f` of the `r`-ball around every point of
/// the fiber. (If `d_A(minv f(y), z) < r` then every `x_j ∈ f⁻¹(y₀)` is
/// within `r` of a point of `f⁻¹(y)`, so `y ∈ f(B(x_j, r))` for each `j`.)
pub fn ahlfors_sample(cover: &BranchedCover, y0: &[f64], r: f64, settings: &AhlforsSettings, stream: u64) -> Result<OmegaFSample> {
    if !(r > 0.0) || settings.samples < 2 {
        return Err(Error::InvalidArgument("need r > 0 and at least two samples".into()));
    }
    let n = cover.n();
    let z = cover.minv(y0)?;
    let big_r = z
        .entries()
        .iter()
        .map(|e| image_radius_bound(cover.map(), &e.x, r))
        .fold(f64::INFINITY, f64::min);
    let vol = unit_ball_volume(n) * big_r.powi(n as i32);
    let chunks = 64usize;
    let per = settings.samples.div_ceil(chunks);
    let stats = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_stream(settings.seed, (stream << 8) | c as u64);
            let mut st = RunningStats::default();
            let count = per.min(settings.samples.saturating_sub(c * per));
            for _ in 0..count {
                let y: Vec<f64> = loop {
                    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    if norm(&u) < 1.0 {
                        break y0.iter().zip(&u).map(|(a, b)| a + big_r * b).collect();
                    }
                };
                if !cover.in_image(&y) {
                    st.push(0.0);
                    continue;
                }
                let inside = distance_value(&cover.minv(&y)?, &z)? < r;
                let value = if inside {
                    match cover.minv_jacobian(&y) {
                        Ok(j) => j * vol,
                        Err(Error::SingularH(_)) => 0.0,
                        Err(e) => return Err(e),
                    }
                } else {
                    0.0
                };
                st.push(value);
            }
            Ok(st)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(RunningStats::default(), RunningStats::merge);
    let (ki, ko) = cover.distortion();
    let bound = unit_ball_volume(n) * (cover.degree() as f64).powf(n as f64 / 2.0) * ki * ko * r.powi(n as i32);
    let se = stats.std_err();
    Ok(OmegaFSample {
        base_point: y0.to_vec(),
        center: z,
        radius: r,
        estimate: stats.mean,
        std_err: se,
        half_width: 1.96 * se,
        ratio: stats.mean / bound,
        ratio_std_err: se / bound,
        sampling_radius: big_r,
        samples: stats.count as usize,
    })
}

/// Every `(center, radius)` pair of the sweep.
pub fn ahlfors_sampler(
    cover: &BranchedCover,
    centers: &[Vec<f64>],
    radii: &[f64],
    settings: &AhlforsSettings,
) -> Result<Vec<OmegaFSample>> {
    let mut out = Vec::with_capacity(centers.len() * radii.len());
    for (i, y) in centers.iter().enumerate() {
        for (k, r) in radii.iter().enumerate() {
            out.push(ahlfors_sample(cover, y, *r, settings, (i * radii.len() + k) as u64)?);
        }
    }
    Ok(out)
}

/// Upper Ahlfors regularity `Hⁿ(B_{Ω_f}(z, r)) ≤ ω_n d^{n/2} K_I K_O rⁿ`,
/// accepted when every ratio is at most `1 + 3σ`.
pub fn ahlfors_check(
    cover: &BranchedCover,
    centers: &[Vec<f64>],
    radii: &[f64],
    settings: &AhlforsSettings,
) -> Result<CheckReport> {
    let samples = ahlfors_sampler(cover, centers, radii, settings)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    let violations = samples.iter().filter(|s| s.ratio > 1.0 + 3.0 * s.ratio_std_err).count();
    let imprecise = samples.iter().filter(|s| s.std_err > settings.precision * s.estimate).count();
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let mut report = CheckReport::new("ahlfors", "prop-ball-upper");
    report.n_samples = samples.iter().map(|s| s.samples as u64).sum();
    report.max_ratio = max_ratio;
    report
        .metric("max_ratio", max_ratio)
        .metric("violations", violations as f64)
        .metric("imprecise", imprecise as f64)
        .metric("balls", samples.len() as f64);
    report.threshold("sigma_multiple", 3.0).threshold("precision", settings.precision);
    if imprecise > 0 {
        report.note(format!("{imprecise} estimates have relative standard error above {}", settings.precision));
    }
    report.table = Some(Table {
        columns: vec!["y0".into(), "y1".into(), "radius".into(), "estimate".into(), "half_width".into(), "ratio".into()],
        rows: samples
            .iter()
            .map(|s| vec![s.base_point[0], s.base_point[1], s.radius, s.estimate, s.half_width, s.ratio])
            .collect(),
    });
    report.pass = violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn settings(samples: usize) -> AhlforsSettings {
        AhlforsSettings { samples, seed: 11, precision: 0.05 }
    }

    #[test]
    fn identity_ball_is_euclidean() {
        let s = ahlfors_sample(&BranchedCover::identity(), &[0.3, -0.2], 0.1, &settings(40_000), 0).unwrap();
        assert!((s.ratio - 1.0).abs() < 3.0 * s.ratio_std_err + 1e-12, "{s:?}");
    }

    #[test]
    fn square_map_small_balls_have_half_the_bound() {
        // d_A(minv f(w²), minv f(1)) = √2|w − 1|, so the ball is the image of
        // B(1, r/√2) under w ↦ ⟦w, −w⟧, which scales area by 2: measure πr².
        let s = ahlfors_sample(&BranchedCover::power(2), &[1.0, 0.0], 0.05, &settings(40_000), 1).unwrap();
        assert!((s.ratio - 0.5).abs() < 4.0 * s.ratio_std_err + 5e-3, "{s:?}");
        assert!(s.estimate <= 2.0 * PI * 0.05f64.powi(2));
    }

    #[test]
    fn sweep_never_exceeds_the_bound() {
        let centers = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-0.7, 0.4]];
        let rep = ahlfors_check(&BranchedCover::power(2), &centers, &[0.02, 0.1, 0.3], &settings(20_000)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn estimates_sharpen_with_more_samples() {
        let f = BranchedCover::power(3);
        let a = ahlfors_sample(&f, &[1.0, 1.0], 0.1, &settings(4_000), 2).unwrap();
        let b = ahlfors_sample(&f, &[1.0, 1.0], 0.1, &settings(64_000), 2).unwrap();
        let shrink = a.std_err / b.std_err;
        assert!(shrink > 2.5 && shrink < 6.0, "{shrink}");
    }
}
