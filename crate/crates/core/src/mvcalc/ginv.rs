use rayon::prelude::*;

use crate::covers::BranchedCover;
use crate::error::{Error, Result};
use crate::numeric::{norm, rng_stream};
use crate::region::Region;
use crate::report::CheckReport;

/// Largest central-difference gradient of `g` over a `res^n` grid in the
/// bounding box of `region`, restricted to nodes whose stencil lies in the
/// region.
fn max_fd_gradient(cover: &BranchedCover, region: &Region, res: usize) -> Result<f64> {
    let (lo, hi) = region.bounding_box();
    let n = lo.len();
    let h: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / res as f64).collect();
    let total = (res + 1).pow(n as u32);
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let k = rem % (res + 1);
                    rem /= res + 1;
                    lo[i] + k as f64 * h[i]
                })
                .collect();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut p = x.clone();
                let mut q = x.clone();
                p[i] += h[i];
                q[i] -= h[i];
                if !region.contains(&p) || !region.contains(&q) || !cover.in_image(&p) || !cover.in_image(&q) {
                    return Ok(0.0);
                }
                let gp = cover.generalized_inverse(&p)?;
                let gq = cover.generalized_inverse(&q)?;
                let diff: Vec<f64> = gp.iter().zip(&gq).map(|(a, b)| (a - b) / (2.0 * h[i])).collect();
                worst = worst.max(norm(&diff));
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// The generalized inverse `g(y) = Σ ι(f, x) x`: checks `g = d·b(minv f)`
/// pointwise and that finite-difference gradients of `g` stay bounded under
/// grid refinement.
pub fn generalized_inverse_check(
    cover: &BranchedCover,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    region.validate()?;
    if region.dim() != cover.n() {
        return Err(Error::DimensionMismatch { expected: cover.n(), got: region.dim() });
    }
    let d = cover.degree() as f64;
    let per: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let y = region.sample(&mut rng_stream(seed, i as u64));
            let g = cover.generalized_inverse(&y)?;
            let b = cover.minv(&y)?.barycenter();
            let defect = g.iter().zip(&b).map(|(gi, bi)| (gi - d * bi).abs()).fold(0.0, f64::max);
            Ok((norm(&g), defect / (1.0 + norm(&g))))
        })
        .collect::<Result<_>>()?;
    let max_g = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let defect = per.iter().map(|p| p.1).fold(0.0, f64::max);
    let coarse = max_fd_gradient(cover, region, 32)?;
    let fine = max_fd_gradient(cover, region, 64)?;
    let stable = fine.is_finite() && fine <= 2.0 * coarse + 1e-9;
    let mut report = CheckReport::new("generalized_inverse", "cor-qr-curve-generalized-inverse");
    report.n_samples = samples as u64;
    report.max_ratio = defect;
    report
        .metric("max_abs_g", max_g)
        .metric("identity_defect", defect)
        .metric("fd_gradient_coarse", coarse)
        .metric("fd_gradient_fine", fine);
    report.threshold("identity_defect", 1e-12);
    report.threshold("gradient_growth", 2.0);
    report.pass = defect <= 1e-12 && stable;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::CatalogMap;

    #[test]
    fn power_maps_have_vanishing_root_sum() {
        for d in 2..6u32 {
            let rep = generalized_inverse_check(&BranchedCover::power(d), &Region::annulus(0.0, 2.0), 1000, 3).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.metrics["max_abs_g"] < 1e-8);
        }
    }

    #[test]
    fn identity_and_polynomials() {
        let id = BranchedCover::identity();
        assert_eq!(id.generalized_inverse(&[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
        // z³ − 3z² + 1: roots sum to 3
        let p = BranchedCover::new(CatalogMap::ComplexPolynomial(
            [1.0, 0.0, -3.0, 1.0].iter().map(|c| num_complex::Complex64::new(*c, 0.0)).collect(),
        ))
        .unwrap();
        let rep = generalized_inverse_check(&p, &Region::Ball { center: vec![0.0, 0.0], radius: 1.0 }, 200, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        let g = p.generalized_inverse(&[0.4, 0.1]).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-8 && g[1].abs() < 1e-8);
    }
}
