//! Small numerical helpers shared by the verifiers: quadrature rules,
//! low-discrepancy points, seeded random streams, running statistics and a
//! few dense linear-algebra conveniences.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).expect("order is positive");
    let rule = GaussLegendre::new(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Composite Gauss–Legendre rule: `panels` equal sub-intervals of `[a, b]`,
/// each with `order` nodes.
pub fn composite_gauss_legendre(order: usize, panels: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| gauss_legendre(order, a + p as f64 * h, a + (p + 1) as f64 * h))
        .collect()
}

const PRIMES: [u8; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103,
    107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
    227, 229, 233, 239, 241, 251,
];

/// The `index`-th point of the Halton sequence in `[0, 1)^dim`.
///
/// Index 0 is skipped (it is the origin in every base).
pub fn halton_point(index: usize, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton dimension {dim} exceeds {}", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| halton::number(b, index + 1)).collect()
}

/// Halton points mapped affinely onto the box `lo..hi`.
pub fn halton_in_box(count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            halton_point(i, lo.len())
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(u, (a, b))| a + u * (b - a))
                .collect()
        })
        .collect()
}

/// Independent random stream `stream` derived from a single 64-bit seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Running mean and variance (Welford), mergeable across threads.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: RunningStats) -> RunningStats {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        RunningStats { count, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest singular value of a square matrix (the minimal stretch).
pub fn min_stretch(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().min()
}

/// Determinant of a small dense matrix stored row-major.
pub fn det(a: &[f64], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => DMatrix::from_row_slice(k, k, a).determinant(),
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(5, 0.0, 2.0);
        let integral: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((integral - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let comp = composite_gauss_legendre(8, 3, -1.0, 2.0);
        assert_eq!(comp.len(), 24);
        let integral: f64 = comp.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((integral - (2f64.exp() - (-1f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn halton_points_are_in_box_and_distinct() {
        let pts = halton_in_box(100, &[-1.0, 2.0], &[1.0, 3.0]);
        for p in &pts {
            assert!((-1.0..1.0).contains(&p[0]) && (2.0..3.0).contains(&p[1]));
        }
        assert_ne!(pts[0], pts[1]);
        assert_eq!(halton_point(0, 2), vec![0.5, 1.0 / 3.0]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_stream(7, 3).random();
        let b: f64 = rng_stream(7, 3).random();
        let c: f64 = rng_stream(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn running_stats_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let all: RunningStats = xs.iter().copied().collect();
        let left: RunningStats = xs[..40].iter().copied().collect();
        let right: RunningStats = xs[40..].iter().copied().collect();
        let merged = left.merge(right);
        assert_eq!(merged.count, 100);
        assert!((merged.mean - all.mean).abs() < 1e-14);
        assert!((merged.variance() - all.variance()).abs() < 1e-14);
    }

    #[test]
    fn small_determinants_and_norms() {
        assert_eq!(det(&[1.0, 2.0, 3.0, 4.0], 2), -2.0);
        let a = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 4.0];
        assert_eq!(det(&a, 3), 24.0);
        let a4: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 2.0 } else { 0.0 }).collect();
        assert!((det(&a4, 4) - 16.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -0.5]);
        assert!((op_norm(&m) - 3.0).abs() < 1e-14);
        assert!((min_stretch(&m) - 0.5).abs() < 1e-14);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}
