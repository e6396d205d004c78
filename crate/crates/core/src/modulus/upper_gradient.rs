use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curves::CurveFamily;
use crate::almgren::distance_value;
use crate::covers::BranchedCover;
use crate::error::{Error, Result};
use crate::numeric::norm;
use crate::report::{CheckReport, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperGradientSettings {
    /// Interior samples per curve, at `t = (i + ½)/samples`.
    pub samples: usize,
    /// Arclength step of the symmetric difference.
    pub step: f64,
    /// Samples closer than `margin · diam(region)` to a branch value are excluded.
    pub margin: f64,
    pub tol: f64,
}

impl Default for UpperGradientSettings {
    fn default() -> Self {
        UpperGradientSettings { samples: 64, step: 1e-4, margin: 1e-3, tol: 1e-6 }
    }
}

struct Sample {
    t: f64,
    speed: f64,
    lower: f64,
    upper: f64,
}

/// `H(γ_t)|γ_t'| ≤ |(minv f∘γ)'_t| ≤ (K_I K_O)^{1/n} H(γ_t)|γ_t'|` along
/// every curve of the family.
///
/// The metric speed is the symmetric difference
/// `d_A(minv f(γ(t+δ)), minv f(γ(t−δ)))/2δ` with an arclength step; the
/// optimal assignment is the matching of the two fibers through `t`.
pub fn upper_gradient_check(
    cover: &BranchedCover,
    family: &CurveFamily,
    settings: &UpperGradientSettings,
) -> Result<CheckReport> {
    if family.dim() != cover.n() {
        return Err(Error::DimensionMismatch { expected: cover.n(), got: family.dim() });
    }
    if settings.samples == 0 || !(settings.step > 0.0) {
        return Err(Error::InvalidArgument("need a positive sample count and step".into()));
    }
    let n = cover.n() as f64;
    let (ki, ko) = cover.distortion();
    let kroot = (ki * ko).powf(1.0 / n);
    let margin = settings.margin * family.region.diameter();
    let branch = cover.branch_values()?;
    let per_curve: Vec<(Vec<Sample>, u64)> = family
        .curves
        .par_iter()
        .map(|c| {
            let mut out = Vec::new();
            let mut excluded = 0;
            for i in 0..settings.samples {
                let t = (i as f64 + 0.5) / settings.samples as f64;
                let y = c.point(t);
                let v = norm(&c.velocity(t));
                let dt = settings.step / v;
                let (ya, yb) = (c.point(t - dt), c.point(t + dt));
                if [&y, &ya, &yb].iter().any(|p| branch.distance(p) < margin || !cover.in_image(p)) {
                    excluded += 1;
                    continue;
                }
                let h = match cover.h_function(&y) {
                    Ok(h) => h,
                    Err(Error::SingularH(_)) => {
                        excluded += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let speed = distance_value(&cover.minv(&ya)?, &cover.minv(&yb)?)? / (2.0 * dt);
                out.push(Sample { t, speed, lower: h * v, upper: kroot * h * v });
            }
            Ok((out, excluded))
        })
        .collect::<Result<_>>()?;
    let excluded: u64 = per_curve.iter().map(|p| p.1).sum();
    let samples: Vec<&Sample> = per_curve.iter().flat_map(|p| &p.0).collect();
    if samples.is_empty() {
        return Err(Error::Numerical("every sample was excluded near branch values".into()));
    }
    let tol = settings.tol;
    let violations = samples
        .iter()
        .filter(|s| s.speed < s.lower * (1.0 - tol) || s.speed > s.upper * (1.0 + tol))
        .count();
    let lower_gap = samples.iter().map(|s| s.speed / s.lower - 1.0).fold(f64::INFINITY, f64::min);
    let upper_ratio = samples.iter().map(|s| s.speed / s.upper).fold(0.0, f64::max);
    let max_gap = samples.iter().map(|s| (s.speed / s.lower - 1.0).abs()).fold(0.0, f64::max);
    let fraction = violations as f64 / samples.len() as f64;
    let mut report = CheckReport::new("upper_gradient", "thm-weak-upper-gradient");
    report.n_samples = samples.len() as u64;
    report.excluded = excluded;
    report.max_ratio = upper_ratio;
    report
        .metric("violation_fraction", fraction)
        .metric("violations", violations as f64)
        .metric("min_lower_gap", lower_gap)
        .metric("max_upper_ratio", upper_ratio)
        .metric("max_relative_gap", max_gap)
        .metric("k_root", kroot);
    report.threshold("tol", tol).threshold("violation_fraction", 0.0);
    report.table = Some(Table {
        columns: vec!["curve".into(), "t".into(), "speed".into(), "lower".into(), "upper".into()],
        rows: per_curve
            .iter()
            .enumerate()
            .flat_map(|(k, p)| p.0.iter().map(move |s| vec![k as f64, s.t, s.speed, s.lower, s.upper]))
            .collect(),
    });
    if excluded > 0 {
        report.note(format!("{excluded} samples within {margin:.3e} of a branch value excluded"));
    }
    report.pass = violations == 0;
    Ok(report)
}
