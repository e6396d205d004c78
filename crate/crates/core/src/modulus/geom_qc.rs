use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curves::CurveFamily;
use super::grid::{curve_row, family_grid, solve_modulus, CurveRow, ModulusSettings};
use crate::covers::{lift_path, BranchedCover, LiftSettings};
use crate::error::{Error, Result};
use crate::numeric::dist;
use crate::report::{CheckReport, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomQcSettings {
    /// Cells per axis.
    pub res: usize,
    pub modulus: ModulusSettings,
    /// Relative discretization slack on both sides of the bound.
    pub slack: f64,
}

impl Default for GeomQcSettings {
    fn default() -> Self {
        GeomQcSettings { res: 256, modulus: ModulusSettings::default(), slack: 0.05 }
    }
}

/// Incidences of `γ` (Euclidean) and of `minv f ∘ γ` (lengths of the matched
/// lift frames, `|(minv f∘γ)'|² = Σ_j |lift_j'|²`) on a common base grid.
fn lifted_rows(
    cover: &BranchedCover,
    family: &CurveFamily,
    grid: &super::grid::Grid,
) -> Vec<Option<(CurveRow, CurveRow)>> {
    let spacing = grid.min_width() / 8.0;
    family
        .curves
        .par_iter()
        .map(|c| {
            let times = c.sample_times(spacing);
            let lifted = lift_path(cover, |t| c.point(t), &times, &LiftSettings::default()).ok()?;
            let base_len: Vec<f64> = lifted.base.windows(2).map(|w| dist(&w[0], &w[1])).collect();
            let lift_len: Vec<f64> = (0..times.len() - 1)
                .map(|i| lifted.lifts.iter().map(|l| dist(&l[i], &l[i + 1]).powi(2)).sum::<f64>().sqrt())
                .collect();
            let a = curve_row(grid, &lifted.base, &base_len).ok()?;
            let b = curve_row(grid, &lifted.base, &lift_len).ok()?;
            Some((a, b))
        })
        .collect()
}

/// Two-sided modulus bound `Mod_n Γ / (K_I K_O) ≤ Mod_n minv f(Γ) ≤ K_I K_O Mod_n Γ`.
///
/// `Mod_n Γ` is the discrete modulus on a grid over the family's region.
/// `Mod_n minv f(Γ)` is computed on the same grid, read through the
/// homeomorphism `minv f: f(Ω) → Ω_f`: a density `ρ` on `Ω_f` becomes
/// `ρ ∘ minv f` on the base, cell volumes are weighted by the metric
/// Jacobian of `minv f` (area formula), and curve lengths are those of the
/// lifted frames. Curves whose lift fails are excluded from both families.
pub fn pushforward_modulus_check(
    cover: &BranchedCover,
    family: &CurveFamily,
    settings: &GeomQcSettings,
) -> Result<CheckReport> {
    if family.dim() != cover.n() {
        return Err(Error::DimensionMismatch { expected: cover.n(), got: family.dim() });
    }
    let n = cover.n() as f64;
    let grid = family_grid(family, settings.res)?;
    let rows = lifted_rows(cover, family, &grid);
    let kept: Vec<&(CurveRow, CurveRow)> = rows.iter().flatten().collect();
    let excluded = rows.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Numerical("no curve of the family could be lifted".into()));
    }
    let base_rows: Vec<CurveRow> = kept.iter().map(|r| r.0.clone()).collect();
    let image_rows: Vec<CurveRow> = kept.iter().map(|r| r.1.clone()).collect();
    let vol = grid.cell_volume();
    let base_weights = vec![vol; grid.cells()];
    let mut touched = vec![false; grid.cells()];
    for row in &image_rows {
        for (c, _) in row {
            touched[*c] = true;
        }
    }
    let image_weights: Vec<f64> = touched
        .par_iter()
        .enumerate()
        .map(|(c, t)| if *t { cover.minv_jacobian(&grid.center(c)).map(|j| vol * j) } else { Ok(vol) })
        .collect::<Result<_>>()?;
    let base = solve_modulus(&grid, &base_rows, &base_weights, n, &settings.modulus, None)?;
    let image = solve_modulus(&grid, &image_rows, &image_weights, n, &settings.modulus, None)?;
    let (ki, ko) = cover.distortion();
    let k = ki * ko;
    let ratio = image.value / base.value;
    let lo = (1.0 / k) * (1.0 - settings.slack);
    let hi = k * (1.0 + settings.slack);
    let mut report = CheckReport::new("geom_qc", "thm-geom-qc");
    report.n_samples = kept.len() as u64;
    report.excluded = excluded as u64;
    report.max_ratio = ratio;
    report
        .metric("modulus_base", base.value)
        .metric("modulus_base_lower", base.lower)
        .metric("modulus_image", image.value)
        .metric("modulus_image_lower", image.lower)
        .metric("ratio", ratio)
        .metric("k_product", k)
        .metric("sweeps", (base.sweeps + image.sweeps) as f64);
    report.threshold("ratio_lower", lo).threshold("ratio_upper", hi);
    if !(base.converged && image.converged) {
        report.note("modulus solver stopped before reaching the requested gap");
    }
    report.pass = ratio >= lo && ratio <= hi;
    Ok(report)
}

/// Discrete modulus of `family` at each resolution (coarsest first), for
/// refinement studies. The last two values must agree within `slack`.
pub fn modulus_refinement(
    family: &CurveFamily,
    resolutions: &[usize],
    exponent: f64,
    settings: &ModulusSettings,
    slack: f64,
    reference: Option<f64>,
) -> Result<CheckReport> {
    if resolutions.is_empty() {
        return Err(Error::InvalidArgument("no grid resolutions".into()));
    }
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &res in resolutions {
        let m = super::grid::discrete_modulus(family, res, exponent, settings)?;
        rows.push(vec![res as f64, m.value, m.lower, m.sweeps as f64]);
        values.push(m.value);
    }
    let last = *values.last().unwrap();
    let stable = values.len() < 2 || (last / values[values.len() - 2] - 1.0).abs() <= slack;
    let mut report = CheckReport::new("discrete_modulus", "thm-geom-qc");
    report.n_samples = family.len() as u64;
    report.max_ratio = reference.map(|r| last / r).unwrap_or(f64::NAN);
    report.metric("modulus", last).metric("stable", if stable { 1.0 } else { 0.0 });
    report.threshold("refinement_slack", slack);
    let mut pass = stable;
    if let Some(r) = reference {
        report.metric("reference", r).metric("relative_error", (last / r - 1.0).abs());
        report.threshold("relative_error", slack);
        pass &= (last / r - 1.0).abs() <= slack;
    }
    report.table = Some(Table {
        columns: vec!["res".into(), "modulus".into(), "dual_lower".into(), "sweeps".into()],
        rows,
    });
    report.pass = pass;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::CatalogMap;
    use nalgebra::DMatrix;
    use std::f64::consts::E;

    fn settings(res: usize) -> GeomQcSettings {
        GeomQcSettings { res, ..Default::default() }
    }

    #[test]
    fn identity_preserves_modulus() {
        let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 256).unwrap();
        let rep = pushforward_modulus_check(&BranchedCover::identity(), &fam, &settings(64)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.metrics["ratio"] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn square_map_is_conformal() {
        let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 512).unwrap();
        let rep = pushforward_modulus_check(&BranchedCover::power(2), &fam, &settings(96)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.excluded, 0);
    }

    #[test]
    fn affine_distortion_within_bounds() {
        let cover = BranchedCover::new(CatalogMap::Precomposed {
            a: DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.0]),
            b: vec![0.0, 0.0],
            base: Box::new(CatalogMap::PlanarPower(2)),
        })
        .unwrap();
        let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 512).unwrap();
        let rep = pushforward_modulus_check(&cover, &fam, &settings(96)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn refinement_study_of_the_ring() {
        let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 1024).unwrap();
        let rep =
            modulus_refinement(&fam, &[64, 128], 2.0, &ModulusSettings::default(), 0.05, Some(2.0 * std::f64::consts::PI))
                .unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
