use crate::almgren::distance_value;
use crate::covers::{normal_neighbourhood_boundary, BranchedCover, CatalogMap};
use crate::error::{Error, Result};
use crate::numeric::{dist, norm};
use crate::report::{CheckReport, Table};

/// One radius of the metric-QC comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricQcRow {
    pub radius: f64,
    /// `L_{minv f}(y, r)`: largest `d_A(minv f(y), minv f(y'))`, `|y' − y| ≤ r`.
    pub big_l: f64,
    /// `l_{minv f}(y, r)`: smallest such distance on `|y' − y| = r`.
    pub small_l: f64,
    /// `Σ ι(f, x) L*_f(x, r)²` over the fiber.
    pub sum_big_star: f64,
    /// `Σ ι(f, x) l*_f(x, r)²`.
    pub sum_small_star: f64,
    /// `Σ H*_f(x, r)²`.
    pub sum_h_star: f64,
}

impl MetricQcRow {
    pub fn h_minv(&self) -> f64 {
        self.big_l / self.small_l
    }
}

const RINGS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Compares `H_{minv f}(y, r)² = (L/l)²` with `Σ_x H*_f(x, r)²`, where
/// `L*_f(x, r)` and `l*_f(x, r)` are the largest and smallest distances from
/// `x` to the boundary of its normal neighbourhood `U_f(x, r)`.
///
/// The circle `|y' − y| = r` and the boundaries of the `U_f(x_j, r)` are
/// sampled at corresponding points, so `L² ≤ Σ ι L*²` and `l² ≥ Σ ι l*²`
/// hold sample by sample whenever the optimal matching is the branchwise one.
pub fn metric_qc_rows(cover: &BranchedCover, y: &[f64], radii: &[f64], m: usize) -> Result<Vec<MetricQcRow>> {
    let k = match cover.map() {
        CatalogMap::PlanarPower(k) => *k,
        _ => return Err(Error::Unsupported("normal neighbourhoods are only available for z ↦ z^k".into())),
    };
    let center = cover.minv(y)?;
    let fiber = center.entries().to_vec();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        if k > 1 && r >= norm(y) {
            return Err(Error::InvalidArgument(format!(
                "radius {r} reaches the branch value: normal neighbourhoods merge"
            )));
        }
        let mut big_l: f64 = 0.0;
        let mut small_l = f64::INFINITY;
        for frac in RINGS {
            // the outer ring uses the same angles as the neighbourhood boundaries
            let shift = if frac == 1.0 { 0.0 } else { 0.5 };
            for i in 0..m {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + shift) / m as f64;
                let w = [y[0] + frac * r * t.cos(), y[1] + frac * r * t.sin()];
                let dv = distance_value(&center, &cover.minv(&w)?)?;
                big_l = big_l.max(dv);
                if frac == 1.0 {
                    small_l = small_l.min(dv);
                }
            }
        }
        let mut sum_big = 0.0;
        let mut sum_small = 0.0;
        let mut sum_h = 0.0;
        for e in &fiber {
            let boundary = normal_neighbourhood_boundary(cover, &e.x, r, m)?;
            let ds: Vec<f64> = boundary.iter().map(|b| dist(&e.x, b)).collect();
            let ls = ds.iter().cloned().fold(0.0, f64::max);
            let ss = ds.iter().cloned().fold(f64::INFINITY, f64::min);
            sum_big += e.w as f64 * ls * ls;
            sum_small += e.w as f64 * ss * ss;
            sum_h += (ls / ss).powi(2);
        }
        rows.push(MetricQcRow { radius: r, big_l, small_l, sum_big_star: sum_big, sum_small_star: sum_small, sum_h_star: sum_h });
    }
    Ok(rows)
}

/// Metric quasiconformality of `minv f` at `y` across the given radii, with
/// the trend of `H_{minv f}(y, r)` as `r` shrinks.
pub fn metric_qc_check(cover: &BranchedCover, y: &[f64], radii: &[f64], m: usize) -> Result<CheckReport> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii".into()));
    }
    let rows = metric_qc_rows(cover, y, radii, m)?;
    let tol = 1e-9;
    let holds = |r: &MetricQcRow| r.h_minv().powi(2) <= r.sum_h_star * (1.0 + tol);
    let failures = rows.iter().filter(|r| !holds(r)).count();
    let worst = rows.iter().map(|r| r.h_minv().powi(2) / r.sum_h_star).fold(0.0, f64::max);
    let big_ok = rows.iter().all(|r| r.big_l.powi(2) <= r.sum_big_star * (1.0 + tol));
    let small_ok = rows.iter().all(|r| r.small_l.powi(2) >= r.sum_small_star * (1.0 - tol));
    let mut by_radius: Vec<&MetricQcRow> = rows.iter().collect();
    by_radius.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let first = by_radius[0];
    let last = by_radius[by_radius.len() - 1];
    let mut report = CheckReport::new("metric_qc", "prop-metric-qc");
    report.n_samples = (rows.len() * m * RINGS.len()) as u64;
    report.max_ratio = worst;
    report
        .metric("failures", failures as f64)
        .metric("max_ratio", worst)
        .metric("h_minv_smallest_radius", first.h_minv())
        .metric("h_minv_largest_radius", last.h_minv())
        .metric("slack_smallest_radius", first.sum_h_star - first.h_minv().powi(2))
        .metric("upper_comparison_holds", big_ok as u8 as f64)
        .metric("lower_comparison_holds", small_ok as u8 as f64)
        .metric("trend_towards_one", ((first.h_minv() - 1.0).abs() <= (last.h_minv() - 1.0).abs()) as u8 as f64);
    report.threshold("ratio", 1.0 + tol);
    report.table = Some(Table {
        columns: ["radius", "h_minv", "sum_h_star", "L", "l", "sum_L_star_sq", "sum_l_star_sq"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: rows
            .iter()
            .map(|r| vec![r.radius, r.h_minv(), r.sum_h_star, r.big_l, r.small_l, r.sum_big_star, r.sum_small_star])
            .collect(),
    });
    report.pass = failures == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_one_on_both_sides() {
        let rows = metric_qc_rows(&BranchedCover::identity(), &[0.3, 0.4], &[0.1, 1.0], 64).unwrap();
        for r in rows {
            assert!((r.h_minv() - 1.0).abs() < 1e-12 && (r.sum_h_star - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_map_with_trend() {
        let rep = metric_qc_check(&BranchedCover::power(2), &[1.0, 0.0], &[0.4, 0.2, 0.1, 0.05, 0.01], 512).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.metrics["trend_towards_one"], 1.0);
        assert_eq!(rep.metrics["upper_comparison_holds"], 1.0);
        assert_eq!(rep.metrics["lower_comparison_holds"], 1.0);
        assert!(rep.metrics["h_minv_smallest_radius"] - 1.0 < 0.02);
        assert!(rep.metrics["slack_smallest_radius"] > 0.9);
    }

    #[test]
    fn large_radius_rejected() {
        assert!(matches!(
            metric_qc_check(&BranchedCover::power(3), &[0.5, 0.0], &[0.6], 64),
            Err(Error::InvalidArgument(_))
        ));
        let poly = BranchedCover::new(CatalogMap::WindingMap3D(2)).unwrap();
        assert!(matches!(metric_qc_check(&poly, &[1.0, 0.0, 0.0], &[0.1], 8), Err(Error::Unsupported(_))));
    }
}
