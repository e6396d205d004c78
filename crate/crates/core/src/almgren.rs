//! The space of unordered `d`-tuples of points in `R^n`.
//!
//! An [`AlmgrenPoint`] stores distinct locations with positive integer
//! multiplicities. The metric is the assignment metric: the minimum, over
//! all pairings of the two expanded tuples, of the root-sum-square of the
//! paired Euclidean distances.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::assignment;
use crate::error::{Error, Result};
use crate::numeric::rng_stream;
use crate::report::CheckReport;

/// Largest tuple size accepted by [`distance_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 8;

/// A location together with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedLocation {
    pub x: Vec<f64>,
    pub w: usize,
}

/// An unordered `d`-tuple in `R^n`, stored with merged multiplicities.
///
/// Entries are kept in lexicographic order of their locations, so two
/// points are equal as multisets iff they compare equal with `==`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct AlmgrenPoint {
    n: usize,
    d: usize,
    entries: Vec<WeightedLocation>,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    n: usize,
    points: Vec<WeightedLocation>,
}

impl TryFrom<RawPoint> for AlmgrenPoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        AlmgrenPoint::new(raw.n, raw.points.into_iter().map(|p| (p.x, p.w)).collect())
    }
}

impl From<AlmgrenPoint> for RawPoint {
    fn from(p: AlmgrenPoint) -> Self {
        RawPoint { n: p.n, points: p.entries }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl AlmgrenPoint {
    /// Builds a point from `(location, weight)` pairs.
    ///
    /// Locations that are bitwise equal (after mapping `-0.0` to `0.0`) are
    /// merged. Weights must be positive and locations finite.
    pub fn new(n: usize, entries: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPoint("ambient dimension must be at least 1".into()));
        }
        if entries.is_empty() {
            return Err(Error::InvalidPoint("a point needs at least one entry".into()));
        }
        let mut items = Vec::with_capacity(entries.len());
        for (mut x, w) in entries {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
            if w == 0 {
                return Err(Error::InvalidPoint("weights must be positive".into()));
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPoint(format!("non-finite location {x:?}")));
            }
            for c in x.iter_mut() {
                if *c == 0.0 {
                    *c = 0.0;
                }
            }
            items.push(WeightedLocation { x, w });
        }
        items.sort_by(|a, b| lex_cmp(&a.x, &b.x));
        let mut merged: Vec<WeightedLocation> = Vec::with_capacity(items.len());
        for item in items {
            match merged.last_mut() {
                Some(last) if last.x == item.x => last.w += item.w,
                _ => merged.push(item),
            }
        }
        let d = merged.iter().map(|e| e.w).sum();
        Ok(AlmgrenPoint { n, d, entries: merged })
    }

    /// Builds a point with every location counted once (duplicates merge).
    pub fn from_points(n: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(n, points.into_iter().map(|x| (x, 1)).collect())
    }

    /// Builds a point from `d` locations stored contiguously.
    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        if n == 0 || flat.len() % n != 0 {
            return Err(Error::InvalidPoint(format!(
                "flat length {} is not a multiple of n = {n}",
                flat.len()
            )));
        }
        Self::from_points(n, flat.chunks(n).map(|c| c.to_vec()).collect())
    }

    /// The diagonal point `d⟦a⟧`.
    pub fn diagonal(a: Vec<f64>, d: usize) -> Result<Self> {
        let n = a.len();
        Self::new(n, vec![(a, d)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total weight.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[WeightedLocation] {
        &self.entries
    }

    /// Each location repeated by its weight, in lexicographic order.
    pub fn expand(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.d);
        for e in &self.entries {
            for _ in 0..e.w {
                out.push(e.x.clone());
            }
        }
        out
    }

    /// [`expand`](Self::expand) flattened into a vector of length `n·d`.
    pub fn expand_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.d);
        for e in &self.entries {
            for _ in 0..e.w {
                out.extend_from_slice(&e.x);
            }
        }
        out
    }

    /// Weighted mean of the locations.
    pub fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        for e in &self.entries {
            for (bi, xi) in b.iter_mut().zip(&e.x) {
                *bi += e.w as f64 * xi;
            }
        }
        let d = self.d as f64;
        b.iter_mut().for_each(|c| *c /= d);
        b
    }

    /// Distance to the diagonal point `d⟦b(p)⟧`, which is the nearest point
    /// of the diagonal. Every pairing with a diagonal point costs the same, so
    /// this is the direct root-sum-square about the barycenter.
    pub fn distance_to_diagonal(&self) -> f64 {
        let b = self.barycenter();
        self.entries
            .iter()
            .map(|e| e.w as f64 * sq_dist(&e.x, &b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `k` such that `k` entries of the expanded tuple lie pairwise
    /// within `tol` of each other. `1` is a regular point, `d` is on the
    /// (approximate) diagonal.
    pub fn singular_stratum(&self, tol: f64) -> usize {
        let m = self.entries.len();
        if m == 1 {
            return self.d;
        }
        let tol2 = tol * tol;
        let adj: Vec<Vec<bool>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| i != j && sq_dist(&self.entries[i].x, &self.entries[j].x) <= tol2)
                    .collect()
            })
            .collect();
        let weights: Vec<usize> = self.entries.iter().map(|e| e.w).collect();
        let mut best = 0;
        max_weight_clique(&adj, &weights, Vec::new(), (0..m).collect(), 0, &mut best);
        best
    }

    fn check_compatible(&self, other: &AlmgrenPoint) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if self.d != other.d {
            return Err(Error::WeightMismatch { left: self.d, right: other.d });
        }
        Ok(())
    }
}

fn max_weight_clique(
    adj: &[Vec<bool>],
    weights: &[usize],
    clique: Vec<usize>,
    candidates: Vec<usize>,
    weight: usize,
    best: &mut usize,
) {
    if weight > *best {
        *best = weight;
    }
    let remaining: usize = candidates.iter().map(|&c| weights[c]).sum();
    if weight + remaining <= *best {
        return;
    }
    for (pos, &c) in candidates.iter().enumerate() {
        let next: Vec<usize> = candidates[pos + 1..]
            .iter()
            .copied()
            .filter(|&o| adj[c][o])
            .collect();
        let mut grown = clique.clone();
        grown.push(c);
        max_weight_clique(adj, weights, grown, next, weight + weights[c], best);
    }
}

/// Value of the assignment distance together with a pairing attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    /// `matching[i] = j` pairs entry `i` of `p.expand()` with entry `j` of
    /// `q.expand()`.
    pub matching: Vec<usize>,
}

fn cost_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let d = a.len();
    let mut cost = Vec::with_capacity(d * d);
    for x in a {
        for y in b {
            cost.push(sq_dist(x, y));
        }
    }
    cost
}

/// Root of the sum of the paired squared distances, summed in ascending
/// order so that pairings with the same multiset of terms give identical
/// values.
fn pairing_value(cost: &[f64], d: usize, matching: &[usize]) -> f64 {
    let mut terms: Vec<f64> = matching.iter().enumerate().map(|(i, &j)| cost[i * d + j]).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().sqrt()
}

/// Assignment distance via the Hungarian method.
///
/// Among optimal pairings the lexicographically smallest one is reported.
pub fn distance(p: &AlmgrenPoint, q: &AlmgrenPoint) -> Result<DistanceResult> {
    p.check_compatible(q)?;
    let a = p.expand();
    let b = q.expand();
    let d = a.len();
    let cost = cost_matrix(&a, &b);
    let scale: f64 = cost.iter().fold(0.0, |m, c| m.max(*c));
    let tol = 1e-12 * (1.0 + scale * d as f64);
    let matching = assignment::solve_lex_smallest(&cost, d, tol);
    let value = pairing_value(&cost, d, &matching);
    Ok(DistanceResult { value, matching })
}

/// Assignment distance value only, skipping the tie-breaking pass.
pub fn distance_value(p: &AlmgrenPoint, q: &AlmgrenPoint) -> Result<f64> {
    p.check_compatible(q)?;
    let a = p.expand();
    let b = q.expand();
    let d = a.len();
    let cost = cost_matrix(&a, &b);
    let matching = assignment::solve(&cost, d);
    Ok(pairing_value(&cost, d, &matching))
}

/// Assignment distance by enumerating every permutation in lexicographic
/// order. Intended as a test oracle.
pub fn distance_bruteforce(p: &AlmgrenPoint, q: &AlmgrenPoint) -> Result<DistanceResult> {
    p.check_compatible(q)?;
    let d = p.d();
    if d > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge { d, limit: BRUTEFORCE_LIMIT });
    }
    let a = p.expand();
    let b = q.expand();
    let cost = cost_matrix(&a, &b);
    let mut perm: Vec<usize> = (0..d).collect();
    let mut best = DistanceResult { value: pairing_value(&cost, d, &perm), matching: perm.clone() };
    while next_permutation(&mut perm) {
        let v = pairing_value(&cost, d, &perm);
        if v < best.value {
            best = DistanceResult { value: v, matching: perm.clone() };
        }
    }
    Ok(best)
}

/// Advances to the next permutation in lexicographic order.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// A random tuple with `d` points uniform in `[-1, 1]^n`.
pub fn random_point(rng: &mut impl rand::Rng, n: usize, d: usize) -> AlmgrenPoint {
    let pts = (0..d).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    AlmgrenPoint::from_points(n, pts).expect("finite coordinates")
}

fn random_shape(rng: &mut impl rand::Rng, d_max: usize, n_max: usize) -> (usize, usize) {
    (rng.random_range(2..=d_max), rng.random_range(1..=n_max))
}

/// Exact agreement of [`distance`] with [`distance_bruteforce`] on random
/// instances with `d ∈ 2..=d_max`, `n ∈ 1..=n_max`.
pub fn metric_oracle_check(instances: usize, d_max: usize, n_max: usize, seed: u64) -> Result<CheckReport> {
    if d_max > BRUTEFORCE_LIMIT || d_max < 2 || n_max < 1 {
        return Err(Error::InvalidArgument(format!("need 2 ≤ d_max ≤ {BRUTEFORCE_LIMIT} and n_max ≥ 1")));
    }
    let diffs: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let (d, n) = random_shape(&mut rng, d_max, n_max);
            let p = random_point(&mut rng, n, d);
            let q = random_point(&mut rng, n, d);
            Ok((distance(&p, &q)?.value - distance_bruteforce(&p, &q)?.value).abs())
        })
        .collect::<Result<_>>()?;
    let mismatches = diffs.iter().filter(|x| **x != 0.0).count();
    let mut report = CheckReport::new("metric_oracle", "eq-almgren-metric");
    report.n_samples = instances as u64;
    report.max_ratio = f64::NAN;
    report.metric("mismatches", mismatches as f64).metric("max_abs_difference", diffs.iter().cloned().fold(0.0, f64::max));
    report.threshold("max_abs_difference", 0.0);
    report.pass = mismatches == 0;
    Ok(report)
}

/// Symmetry, identity of indiscernibles and the triangle inequality on
/// random triples.
pub fn metric_axioms_check(triples: usize, d_max: usize, n_max: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let rows: Vec<(f64, f64, f64)> = (0..triples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let (d, n) = random_shape(&mut rng, d_max, n_max);
            let p = random_point(&mut rng, n, d);
            let q = random_point(&mut rng, n, d);
            let r = random_point(&mut rng, n, d);
            let pq = distance_value(&p, &q)?;
            let qr = distance_value(&q, &r)?;
            let pr = distance_value(&p, &r)?;
            let asym = (pq - distance_value(&q, &p)?).abs();
            // the same multiset listed in another order
            let mut shuffled = p.expand();
            shuffled.reverse();
            let self_dist = distance_value(&p, &AlmgrenPoint::from_points(n, shuffled)?)?;
            Ok((pr - pq - qr, asym, self_dist))
        })
        .collect::<Result<_>>()?;
    let excess = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let asym = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let self_dist = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut report = CheckReport::new("metric_axioms", "eq-almgren-metric");
    report.n_samples = triples as u64;
    report.max_ratio = f64::NAN;
    report
        .metric("max_triangle_excess", excess)
        .metric("max_asymmetry", asym)
        .metric("max_self_distance", self_dist);
    report.threshold("triangle_excess", tol);
    report.pass = excess <= tol && asym == 0.0 && self_dist == 0.0;
    Ok(report)
}

/// `√d |b(p) − b(q)| ≤ d_A(p, q)`, with equality on pairs of diagonal points.
pub fn barycenter_lipschitz_check(pairs: usize, d_max: usize, n_max: usize, seed: u64) -> Result<CheckReport> {
    let rows: Vec<(f64, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i as u64);
            let (d, n) = random_shape(&mut rng, d_max, n_max);
            let p = random_point(&mut rng, n, d);
            let q = random_point(&mut rng, n, d);
            let ratio = |p: &AlmgrenPoint, q: &AlmgrenPoint| -> Result<f64> {
                let db = crate::numeric::dist(&p.barycenter(), &q.barycenter());
                Ok((d as f64).sqrt() * db / distance_value(p, q)?)
            };
            let a = AlmgrenPoint::diagonal(p.barycenter(), d)?;
            let b = AlmgrenPoint::diagonal(q.barycenter(), d)?;
            Ok((ratio(&p, &q)?, ratio(&a, &b)?))
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let diag_gap = rows.iter().map(|r| (r.1 - 1.0).abs()).fold(0.0, f64::max);
    let mut report = CheckReport::new("barycenter", "lemma-barycenter");
    report.n_samples = pairs as u64;
    report.max_ratio = max_ratio;
    report.metric("max_ratio", max_ratio).metric("diagonal_equality_gap", diag_gap);
    report.threshold("max_ratio", 1.0 + 1e-12).threshold("diagonal_equality_gap", 1e-12);
    report.pass = max_ratio <= 1.0 + 1e-12 && diag_gap <= 1e-12;
    Ok(report)
}
