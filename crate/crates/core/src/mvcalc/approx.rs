//! The interpolation `f_ε` that collapses `f` onto the diagonal near the
//! set where `f` is almost single-valued.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::{MultiValuedMap, Provenance};
use crate::almgren::{distance_value, AlmgrenPoint};
use crate::error::{Error, Result};
use crate::numeric::{dist, halton_point, rng_stream};
use crate::region::Region;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FepsSettings {
    /// Quasi-random points used to represent `F_ε`.
    pub cloud: usize,
    /// Random probes used to estimate the fill distance of the cloud.
    pub probes: usize,
    pub seed: u64,
}

impl Default for FepsSettings {
    fn default() -> Self {
        FepsSettings { cloud: 10_000, probes: 2_000, seed: 7 }
    }
}

/// `f_ε` together with the data it was built from.
#[derive(Debug, Clone)]
pub struct Interpolation {
    pub map: MultiValuedMap,
    pub epsilon: f64,
    /// Lipschitz constant used, `max(L, 1)`.
    pub lipschitz: f64,
    /// Safety-enlarged fill distance `h` of the cloud.
    pub fill: f64,
    pub cloud: Vec<Vec<f64>>,
    /// Cloud points taken as the sample of `F_ε`.
    pub support: Arc<Vec<Vec<f64>>>,
    /// Every cloud point lies in `F_ε`, so `f_ε = d⟦b(f)⟧` throughout.
    pub covers_domain: bool,
}

/// Quasi-random points of `region` (Halton sequence, rejected outside).
pub fn halton_cloud(region: &Region, count: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = region.bounding_box();
    let dim = lo.len();
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let u = halton_point(index, dim);
        index += 1;
        let x: Vec<f64> = u.iter().zip(lo.iter().zip(&hi)).map(|(t, (a, b))| a + t * (b - a)).collect();
        if region.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn nearest(points: &[Vec<f64>], x: &[f64]) -> f64 {
    points.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min)
}

/// `d_A(f(x), d⟦b(f(x))⟧)`.
fn diagonal_distance(p: &AlmgrenPoint) -> f64 {
    p.distance_to_diagonal()
}

fn collapse(p: &AlmgrenPoint, eta: f64) -> Result<AlmgrenPoint> {
    let b = p.barycenter();
    let pts = p
        .expand()
        .into_iter()
        .map(|x| x.iter().zip(&b).map(|(xi, bi)| (1.0 - eta) * xi + eta * bi).collect())
        .collect();
    AlmgrenPoint::from_points(p.n(), pts)
}

/// `f_ε = ⟦(1 − η)f_1 + η b(f), …, (1 − η)f_d + η b(f)⟧` with
/// `η = (1 − (dist(S, ·) − h)₊/ε)₊`, where `S` is the part of a
/// quasi-random cloud with `d_A(f, d⟦b(f)⟧) < ε + L h` and `h` is twice the
/// sampled fill distance of the cloud. Every point of `F_ε` is within `h` of
/// `S`, so `η = 1` there.
pub fn interpolate_feps(f: &MultiValuedMap, epsilon: f64, settings: &FepsSettings) -> Result<Interpolation> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let l = f
        .lipschitz()
        .ok_or_else(|| Error::InvalidArgument("interpolation needs a known Lipschitz bound".into()))?
        .max(1.0);
    let domain = f.domain().clone();
    let cloud = halton_cloud(&domain, settings.cloud.max(1));
    let fill = 2.0
        * (0..settings.probes.max(1))
            .into_par_iter()
            .map(|i| nearest(&cloud, &domain.sample(&mut rng_stream(settings.seed, i as u64))))
            .reduce(|| 0.0, f64::max);
    let distances: Vec<f64> =
        cloud.par_iter().map(|x| f.eval(x).map(|p| diagonal_distance(&p))).collect::<Result<_>>()?;
    let support: Vec<Vec<f64>> = cloud
        .iter()
        .zip(&distances)
        .filter(|(_, dd)| **dd < epsilon + l * fill)
        .map(|(x, _)| x.clone())
        .collect();
    let covers_domain = distances.iter().all(|dd| *dd < epsilon);
    let support = Arc::new(support);
    let (g, s) = (f.clone(), support.clone());
    let eval = move |x: &[f64]| {
        let p = g.eval(x)?;
        let ds = nearest(&s, x);
        let eta = (1.0 - (ds - fill).max(0.0) / epsilon).max(0.0);
        if eta == 0.0 {
            Ok(p)
        } else {
            collapse(&p, eta)
        }
    };
    let map = MultiValuedMap::from_fn(f.m(), f.n(), f.d(), domain, Provenance::Interpolated, eval)?
        .with_lipschitz((3.0 + 2.0 * f.d() as f64) * l)
        .with_provenance(Provenance::Interpolated);
    Ok(Interpolation { map, epsilon, lipschitz: l, fill, cloud, support, covers_domain })
}

/// Largest `d_A(f(x), f(y))/|x − y|` over `pairs` random pairs with
/// `|x − y|` log-uniform in `[1e-3, 1e-1]·diam`.
pub fn sampled_lipschitz(f: &MultiValuedMap, pairs: usize, seed: u64) -> Result<f64> {
    let domain = f.domain().clone();
    let diam = domain.diameter();
    let m = f.m();
    (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let (x, y) = loop {
                let x = domain.sample(&mut rng);
                let mut u: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
                let nu = crate::numeric::norm(&u);
                if nu == 0.0 {
                    continue;
                }
                let delta = diam * 10f64.powf(rng.random_range(-3.0..-1.0));
                u.iter_mut().for_each(|v| *v *= delta / nu);
                let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
                if domain.contains(&y) {
                    break (x, y);
                }
            };
            Ok(distance_value(&f.eval(&x)?, &f.eval(&y)?)? / dist(&x, &y))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Checks the three properties of `f_ε`: `f_ε = d⟦b(f)⟧` on `F_ε`,
/// `sup d_A(f_ε, f) ≤ 2Lε` and `LIP(f_ε) ≤ (3 + 2d)L`.
pub fn feps_check(f: &MultiValuedMap, epsilon: f64, samples: usize, settings: &FepsSettings) -> Result<CheckReport> {
    let interp = interpolate_feps(f, epsilon, settings)?;
    let fe = &interp.map;
    let l = interp.lipschitz;
    let d = f.d() as f64;
    let mut rng_points: Vec<Vec<f64>> =
        (0..samples).map(|i| f.domain().sample(&mut rng_stream(settings.seed ^ 0x5eed, i as u64))).collect();
    rng_points.extend(interp.cloud.iter().cloned());
    let per_point: Vec<(f64, f64, bool)> = rng_points
        .par_iter()
        .map(|x| {
            let p = f.eval(x)?;
            let q = fe.eval(x)?;
            let dev = distance_value(&p, &q)?;
            let dd = diagonal_distance(&p);
            let mut diag_defect = 0.0;
            if dd < epsilon {
                let b = p.barycenter();
                diag_defect = distance_value(&q, &AlmgrenPoint::diagonal(b, p.d())?)?;
            }
            Ok((dev, diag_defect, dd < epsilon))
        })
        .collect::<Result<_>>()?;
    let deviation = per_point.iter().map(|t| t.0).fold(0.0, f64::max);
    let diag_defect = per_point.iter().map(|t| t.1).fold(0.0, f64::max);
    let in_f_eps = per_point.iter().filter(|t| t.2).count();
    let lip = sampled_lipschitz(fe, samples, settings.seed.wrapping_add(1))?;
    let lip_bound = (3.0 + 2.0 * d) * l;
    let dev_bound = 2.0 * l * epsilon;
    let mut report = CheckReport::new("feps", "prop-multivalued-approx");
    report.n_samples = (rng_points.len() + samples) as u64;
    report.max_ratio = (lip / lip_bound).max(deviation / dev_bound);
    report
        .metric("sampled_lipschitz", lip)
        .metric("lipschitz_ratio", lip / lip_bound)
        .metric("sup_deviation", deviation)
        .metric("deviation_ratio", deviation / dev_bound)
        .metric("diagonal_defect", diag_defect)
        .metric("fill_distance", interp.fill)
        .metric("support_points", interp.support.len() as f64)
        .metric("points_in_f_eps", in_f_eps as f64)
        .metric("lipschitz_bound_used", l);
    report.threshold("lipschitz_ratio", 1.0 + 1e-6);
    report.threshold("deviation_ratio", 1.0 + 1e-6);
    report.threshold("diagonal_defect", 1e-12);
    if interp.covers_domain {
        report.note("F_ε covers the sampled domain: f_ε = d⟦b(f)⟧ everywhere");
    }
    if f.lipschitz().unwrap_or(0.0) < 1.0 {
        report.note("Lipschitz bound below 1 raised to 1");
    }
    report.pass = lip <= lip_bound * (1.0 + 1e-6) && deviation <= dev_bound * (1.0 + 1e-6) && diag_defect <= 1e-12;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn fold(d: usize) -> MultiValuedMap {
        let a = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.4, 0.9]);
        let w: Vec<Vec<f64>> = match d {
            2 => vec![vec![1.0, 0.5], vec![-1.0, -0.5]],
            _ => vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![-0.5, -0.8]],
        };
        MultiValuedMap::folded(Region::unit_box(2), a, vec![0.0, 0.1], vec![1.0, -0.5], 0.2, w).unwrap()
    }

    #[test]
    fn feps_is_diagonal_on_f_eps() {
        let f = fold(2);
        let s = FepsSettings { cloud: 4000, probes: 500, seed: 3 };
        let it = interpolate_feps(&f, 0.15, &s).unwrap();
        assert_eq!(it.map.provenance(), Provenance::Interpolated);
        assert!(!it.covers_domain);
        for x in it.cloud.iter().step_by(7) {
            let p = f.eval(x).unwrap();
            if p.distance_to_diagonal() < 0.15 {
                let q = it.map.eval(x).unwrap();
                let diag = AlmgrenPoint::diagonal(p.barycenter(), 2).unwrap();
                assert!(distance_value(&q, &diag).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn feps_bounds_hold() {
        for d in [2, 3] {
            let rep = feps_check(&fold(d), 0.2, 2000, &FepsSettings { cloud: 4000, probes: 500, seed: 5 }).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn large_epsilon_collapses_everything() {
        let it = interpolate_feps(&fold(2), 50.0, &FepsSettings { cloud: 500, probes: 100, seed: 1 }).unwrap();
        assert!(it.covers_domain);
        let p = it.map.eval(&[0.9, 0.9]).unwrap();
        assert!(p.distance_to_diagonal() < 1e-12);
    }

    #[test]
    fn sampled_lipschitz_of_affine_branches() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let f = MultiValuedMap::affine_branches(Region::unit_box(2), vec![a], vec![vec![0.0, 0.0]]).unwrap();
        let l = sampled_lipschitz(&f, 2000, 9).unwrap();
        assert!(l <= 2.0 + 1e-12 && l > 1.9);
    }
}
