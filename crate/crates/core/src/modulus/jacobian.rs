use rayon::prelude::*;

use crate::covers::BranchedCover;
use crate::error::{Error, Result};
use crate::mvcalc::{differential, MultiValuedMap};
use crate::numeric::rng_stream;
use crate::region::Region;
use crate::report::CheckReport;

/// Metric Jacobian `√det(Mᵀ M)` of the stacked frame differential `M`
/// (`nd × n`) of `minv f` at `y`, by finite differences along matched
/// branches.
pub fn fd_minv_jacobian(inverse: &MultiValuedMap, y: &[f64], h: f64) -> Result<f64> {
    let df = differential(inverse, y, h)?;
    if df.on_singular_set {
        return Err(Error::SingularH(y.to_vec()));
    }
    let m = df.stacked();
    Ok((m.transpose() * &m).determinant().max(0.0).sqrt())
}

/// `Hⁿ ≤ 𝐉 minv f ≤ K_I K_O Hⁿ` at random points of `region`, with the
/// Jacobian estimated by finite differences. Samples within `margin` of a
/// branch value are excluded.
pub fn jacobian_vs_h_check(
    cover: &BranchedCover,
    region: &Region,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    region.validate()?;
    let inverse = MultiValuedMap::inverse_of(cover, region.clone())?.without_branches();
    let n = cover.n() as i32;
    let (ki, ko) = cover.distortion();
    let branch = cover.branch_values()?;
    let margin = 1e-3 * region.diameter();
    let h = 1e-5 * region.diameter();
    let rows: Vec<Option<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let y = region.sample(&mut rng_stream(seed, i as u64));
            if branch.distance(&y) < margin {
                return Ok(None);
            }
            let hn = match cover.h_function(&y) {
                Ok(v) => v.powi(n),
                Err(Error::SingularH(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let j_fd = match fd_minv_jacobian(&inverse, &y, h) {
                Ok(v) => v,
                Err(Error::SingularH(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let j_exact = cover.minv_jacobian(&y)?;
            Ok(Some((hn, j_fd, j_exact)))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<(f64, f64, f64)> = rows.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::Numerical("every sample was excluded".into()));
    }
    let k = ki * ko;
    let violations =
        kept.iter().filter(|(hn, j, _)| *j < hn * (1.0 - tol) || *j > k * hn * (1.0 + tol)).count();
    let min_lower = kept.iter().map(|(hn, j, _)| j / hn).fold(f64::INFINITY, f64::min);
    let max_upper = kept.iter().map(|(hn, j, _)| j / (k * hn)).fold(0.0, f64::max);
    let fd_vs_exact = kept.iter().map(|(_, j, e)| (j / e - 1.0).abs()).fold(0.0, f64::max);
    let mut report = CheckReport::new("jacobian_vs_h", "prop-jacobian-vs-h");
    report.n_samples = kept.len() as u64;
    report.excluded = (samples - kept.len()) as u64;
    report.max_ratio = max_upper;
    report
        .metric("violations", violations as f64)
        .metric("min_j_over_hn", min_lower)
        .metric("max_j_over_khn", max_upper)
        .metric("fd_vs_exact", fd_vs_exact)
        .metric("k_product", k);
    report.threshold("tol", tol);
    report.pass = violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::CatalogMap;
    use nalgebra::DMatrix;

    fn annulus() -> Region {
        Region::annulus(0.5, 2.0)
    }

    #[test]
    fn conformal_powers_are_equalities() {
        for k in 1..=3 {
            let rep = jacobian_vs_h_check(&BranchedCover::power(k), &annulus(), 300, 1, 1e-3).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!((rep.metrics["min_j_over_hn"] - 1.0).abs() < 1e-6);
            assert!(rep.metrics["fd_vs_exact"] < 1e-6);
        }
    }

    #[test]
    fn non_conformal_sits_inside_the_band() {
        let cover = BranchedCover::new(CatalogMap::Precomposed {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.5]),
            b: vec![0.0, 0.3],
            base: Box::new(CatalogMap::PlanarPower(2)),
        })
        .unwrap();
        let rep = jacobian_vs_h_check(&cover, &annulus(), 300, 2, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["min_j_over_hn"] > 1.0 + 1e-3);
    }

    #[test]
    fn winding_map_in_three_dimensions() {
        let cover = BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap();
        let region = Region::Box { lo: vec![0.3, 0.3, -0.5], hi: vec![1.0, 1.0, 0.5] };
        let rep = jacobian_vs_h_check(&cover, &region, 200, 3, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
