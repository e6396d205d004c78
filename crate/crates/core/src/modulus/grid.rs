//! Discrete `n`-modulus of a curve family on a uniform grid.
//!
//! With `ℓ_{γ,c}` the length of `γ` inside cell `c` and `w_c` the cell
//! weight (its volume, possibly times a Jacobian), the discrete modulus is
//!
//! `min Σ_c w_c ρ_cⁿ  subject to  Σ_c ℓ_{γ,c} ρ_c ≥ 1 for every γ, ρ ≥ 0.`
//!
//! It is solved by exact coordinate ascent on the concave dual
//! `D(λ) = Σ_γ λ_γ − (n − 1) Σ_c w_c ρ_c(λ)ⁿ`, where
//! `ρ_c(λ) = ((Σ_γ λ_γ ℓ_{γ,c}) / (n w_c))^{1/(n−1)}` (Hildreth's method for
//! `n = 2`). The dual value is a lower bound; rescaling `ρ(λ)` to be
//! admissible gives an upper bound, and the iteration stops when the two
//! agree to the requested relative gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curves::CurveFamily;
use crate::error::{Error, Result};
use crate::numeric::dist;

/// `res^n` congruent cells covering the box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub res: usize,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: usize) -> Result<Self> {
        if res == 0 || lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("grid needs a non-degenerate box and res ≥ 1".into()));
        }
        Ok(Grid { lo, hi, res })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cells(&self) -> usize {
        self.res.pow(self.dim() as u32)
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.res as f64
    }

    pub fn min_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut index = 0;
        let mut stride = 1;
        for (i, v) in x.iter().enumerate() {
            let k = ((v - self.lo[i]) / self.width(i)).floor();
            if !(k >= 0.0 && k < self.res as f64) {
                return None;
            }
            index += k as usize * stride;
            stride *= self.res;
        }
        Some(index)
    }

    pub fn center(&self, cell: usize) -> Vec<f64> {
        let mut rem = cell;
        (0..self.dim())
            .map(|i| {
                let k = rem % self.res;
                rem /= self.res;
                self.lo[i] + (k as f64 + 0.5) * self.width(i)
            })
            .collect()
    }
}

/// Nonnegative cell values `ρ` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub exponent: f64,
}

impl DensityField {
    /// `∫_γ ρ ds` for a discretized curve.
    pub fn line_integral(&self, row: &[(usize, f64)]) -> f64 {
        row.iter().map(|(c, l)| l * self.values[*c]).sum()
    }
}

/// Sparse `(cell, length)` incidences of one curve.
pub type CurveRow = Vec<(usize, f64)>;

/// Splits a sampled curve into cells: segment `i` (from `points[i]` to
/// `points[i+1]`) contributes `lengths[i]` to the cell of its midpoint.
pub fn curve_row(grid: &Grid, points: &[Vec<f64>], lengths: &[f64]) -> Result<CurveRow> {
    let mut row: CurveRow = Vec::with_capacity(lengths.len());
    for (w, l) in points.windows(2).zip(lengths) {
        let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let cell = grid
            .cell_of(&mid)
            .ok_or_else(|| Error::InvalidArgument(format!("curve leaves the grid at {mid:?}")))?;
        row.push((cell, *l));
    }
    row.sort_by_key(|e| e.0);
    let mut merged: CurveRow = Vec::with_capacity(row.len());
    for (c, l) in row {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += l,
            _ => merged.push((c, l)),
        }
    }
    if merged.iter().map(|e| e.1).sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument("curve of zero length".into()));
    }
    Ok(merged)
}

/// Euclidean incidences of every curve of the family, sampled at a spacing
/// of an eighth of the cell width.
pub fn family_rows(family: &CurveFamily, grid: &Grid) -> Result<Vec<CurveRow>> {
    let spacing = grid.min_width() / 8.0;
    family
        .curves
        .par_iter()
        .map(|c| {
            let pts: Vec<Vec<f64>> = c.sample_times(spacing).iter().map(|t| c.point(*t)).collect();
            let lengths: Vec<f64> = pts.windows(2).map(|w| dist(&w[0], &w[1])).collect();
            curve_row(grid, &pts, &lengths)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSettings {
    pub max_sweeps: usize,
    /// Target relative gap between the primal and dual bounds.
    pub tol: f64,
}

impl Default for ModulusSettings {
    fn default() -> Self {
        ModulusSettings { max_sweeps: 10_000, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// Value of an admissible density: an upper bound for the discrete modulus.
    pub value: f64,
    /// Dual value: a lower bound for the discrete modulus.
    pub lower: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub density: DensityField,
    /// Curve multipliers, usable as a warm start.
    pub multipliers: Vec<f64>,
}

impl ModulusResult {
    pub fn relative_gap(&self) -> f64 {
        (self.value - self.lower) / self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// `ρ_c` as a function of `s_c = Σ λ ℓ`.
fn density(s: f64, w: f64, n: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if n == 2.0 {
        s / (2.0 * w)
    } else {
        (s / (n * w)).powf(1.0 / (n - 1.0))
    }
}

/// Finds `δ ≥ −λ` with `Σ ℓ ρ(s + δℓ) = 1`, or `−λ` if even that overshoots.
fn coordinate_step(row: &[(usize, f64)], s: &[f64], w: &[f64], n: f64, lambda: f64) -> f64 {
    let phi = |delta: f64| row.iter().map(|(c, l)| l * density(s[*c] + delta * l, w[*c], n)).sum::<f64>();
    if n == 2.0 {
        let phi0 = phi(0.0);
        let slope: f64 = row.iter().map(|(c, l)| l * l / (2.0 * w[*c])).sum();
        return ((1.0 - phi0) / slope).max(-lambda);
    }
    let lo_val = phi(-lambda);
    if lo_val >= 1.0 {
        return -lambda;
    }
    let (mut lo, mut hi) = (-lambda, (lambda).max(1e-12));
    while phi(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the discrete modulus problem for the given incidences and cell
/// weights. `warm` supplies initial multipliers.
pub fn solve_modulus(
    grid: &Grid,
    rows: &[CurveRow],
    weights: &[f64],
    exponent: f64,
    settings: &ModulusSettings,
    warm: Option<&[f64]>,
) -> Result<ModulusResult> {
    if !(exponent > 1.0) {
        return Err(Error::InvalidArgument("modulus exponent must exceed 1".into()));
    }
    if weights.len() != grid.cells() {
        return Err(Error::DimensionMismatch { expected: grid.cells(), got: weights.len() });
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty curve family".into()));
    }
    for row in rows {
        if row.iter().any(|(c, l)| *c >= weights.len() || !(*l >= 0.0) || (*l > 0.0 && !(weights[*c] > 0.0))) {
            return Err(Error::InvalidArgument("curve row references a cell without positive weight".into()));
        }
    }
    let n = exponent;
    let mut lambda = match warm {
        Some(w) if w.len() == rows.len() => w.to_vec(),
        _ => vec![0.0; rows.len()],
    };
    let mut s = vec![0.0; grid.cells()];
    for (row, lam) in rows.iter().zip(&lambda) {
        for (c, l) in row {
            s[*c] += lam * l;
        }
    }
    let bounds = |s: &[f64], lambda: &[f64]| -> (f64, f64, Vec<f64>) {
        let rho: Vec<f64> = s.iter().zip(weights).map(|(si, wi)| density(*si, *wi, n)).collect();
        let energy: f64 = rho.iter().zip(weights).map(|(r, w)| w * r.powf(n)).sum();
        let lower = lambda.iter().sum::<f64>() - (n - 1.0) * energy;
        let min_adm = rows
            .iter()
            .map(|row| row.iter().map(|(c, l)| l * rho[*c]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let upper = if min_adm > 0.0 { energy / min_adm.powf(n) } else { f64::INFINITY };
        let scaled = rho.iter().map(|r| if min_adm > 0.0 { r / min_adm } else { *r }).collect();
        (upper, lower, scaled)
    };
    let mut sweeps = 0;
    let mut converged = false;
    let (mut upper, mut lower, mut rho) = (f64::INFINITY, f64::NEG_INFINITY, Vec::new());
    while sweeps < settings.max_sweeps {
        for (row, lam) in rows.iter().zip(lambda.iter_mut()) {
            let delta = coordinate_step(row, &s, weights, n, *lam);
            if delta != 0.0 {
                *lam += delta;
                for (c, l) in row {
                    s[*c] = (s[*c] + delta * l).max(0.0);
                }
            }
        }
        sweeps += 1;
        if sweeps % 10 == 0 || sweeps == settings.max_sweeps {
            let b = bounds(&s, &lambda);
            upper = b.0;
            lower = b.1;
            rho = b.2;
            if upper.is_finite() && (upper - lower) <= settings.tol * upper {
                converged = true;
                break;
            }
        }
    }
    if rho.is_empty() {
        let b = bounds(&s, &lambda);
        upper = b.0;
        lower = b.1;
        rho = b.2;
    }
    Ok(ModulusResult {
        value: upper,
        lower,
        sweeps,
        converged,
        density: DensityField { grid: grid.clone(), values: rho, exponent: n },
        multipliers: lambda,
    })
}

/// Grid of `res` cells per axis over the bounding box of the family's region.
pub fn family_grid(family: &CurveFamily, res: usize) -> Result<Grid> {
    let (lo, hi) = family.region.bounding_box();
    // pad by a hair so that curves on the boundary stay inside
    let pad: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 1e-9 * (b - a)).collect();
    Grid::new(
        lo.iter().zip(&pad).map(|(a, p)| a - p).collect(),
        hi.iter().zip(&pad).map(|(b, p)| b + p).collect(),
        res,
    )
}

/// `Mod_n(Γ)` of a curve family on a `res^n` grid with cell volumes as weights.
pub fn discrete_modulus(
    family: &CurveFamily,
    res: usize,
    exponent: f64,
    settings: &ModulusSettings,
) -> Result<ModulusResult> {
    let grid = family_grid(family, res)?;
    let rows = family_rows(family, &grid)?;
    let weights = vec![grid.cell_volume(); grid.cells()];
    solve_modulus(&grid, &rows, &weights, exponent, settings, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::curves::Curve;
    use crate::region::Region;
    use std::f64::consts::{E, PI};

    #[test]
    fn grid_indexing_round_trips() {
        let g = Grid::new(vec![0.0, -1.0], vec![2.0, 1.0], 10).unwrap();
        for cell in [0, 7, 55, 99] {
            assert_eq!(g.cell_of(&g.center(cell)), Some(cell));
        }
        assert_eq!(g.cell_of(&[2.5, 0.0]), None);
        assert!((g.cell_volume() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn single_segment_modulus() {
        // one horizontal segment of length L through cells of area h²:
        // ρ = 1/L on the k = L/h crossed cells, Mod = k·h²/L² = h/L
        let fam = CurveFamily::new(
            vec![Curve::Segment { from: vec![0.1, 0.55], to: vec![0.9, 0.55] }],
            Region::unit_box(2),
        )
        .unwrap();
        let res = 10;
        let m = discrete_modulus(&fam, res, 2.0, &ModulusSettings::default()).unwrap();
        let h = 1.0 / res as f64;
        // cells partially crossed at the ends carry proportionally less length
        let rows = family_rows(&fam, &family_grid(&fam, res).unwrap()).unwrap();
        let expected = 1.0 / rows[0].iter().map(|(_, l)| l * l / (h * h)).sum::<f64>();
        assert!(m.converged);
        assert!((m.value - expected).abs() < 1e-8 * expected, "{} vs {expected}", m.value);
        assert!(m.lower <= m.value * (1.0 + 1e-12));
    }

    #[test]
    fn ring_modulus() {
        let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 1024).unwrap();
        let m = discrete_modulus(&fam, 128, 2.0, &ModulusSettings::default()).unwrap();
        let exact = 2.0 * PI;
        assert!((m.value / exact - 1.0).abs() < 0.05, "{} vs {exact} after {} sweeps", m.value, m.sweeps);
    }

    #[test]
    fn superset_family_has_larger_modulus() {
        let small = CurveFamily::radial([0.0, 0.0], 1.0, 2.0, 64).unwrap();
        let mut curves = small.curves.clone();
        curves.extend(CurveFamily::radial([0.0, 0.0], 1.0, 2.0, 37).unwrap().curves);
        let big = CurveFamily::new(curves, small.region.clone()).unwrap();
        let s = ModulusSettings::default();
        let a = discrete_modulus(&small, 64, 2.0, &s).unwrap();
        let b = discrete_modulus(&big, 64, 2.0, &s).unwrap();
        assert!(b.value >= a.lower * (1.0 - 1e-4));
    }

    #[test]
    fn three_dimensional_exponent() {
        let fam = CurveFamily::new(
            vec![
                Curve::Segment { from: vec![0.1, 0.5, 0.5], to: vec![0.9, 0.5, 0.5] },
                Curve::Segment { from: vec![0.5, 0.1, 0.5], to: vec![0.5, 0.9, 0.5] },
            ],
            Region::unit_box(3),
        )
        .unwrap();
        let m = discrete_modulus(&fam, 8, 3.0, &ModulusSettings::default()).unwrap();
        assert!(m.converged, "{m:?}");
        assert!(m.lower <= m.value && m.value > 0.0);
    }
}
