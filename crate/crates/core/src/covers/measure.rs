//! Monte Carlo check of `H^n((minv f ∘ f)⁻¹E) ≤ d·H^n(E)` for a ball `E`
//! of the assignment metric centred on `Ω_f`.
//!
//! Both sides are estimated from one uniform sample of a box containing
//! `∪_j B(z_j, r)`, which contains `(minv f ∘ f)⁻¹E`. The right side uses
//! the area formula pulled back by `f`:
//! `H^n(E) = (1/d) ∫_{F⁻¹E} 𝐉minv f(f(x)) 𝐉f(x) dx`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::BranchedCover;
use crate::almgren::distance_value;
use crate::error::{Error, Result};
use crate::numeric::rng_stream;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreimageMeasureSettings {
    pub samples: usize,
    pub seed: u64,
    /// Fewer hits than this inside the preimage flags the run as
    /// under-sampled.
    pub min_hits: usize,
}

impl Default for PreimageMeasureSettings {
    fn default() -> Self {
        PreimageMeasureSettings { samples: 200_000, seed: 7, min_hits: 1000 }
    }
}

const CHUNK: usize = 4096;

#[derive(Default, Clone, Copy)]
struct Sums {
    n: f64,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
    hits: usize,
    excluded: usize,
}

impl Sums {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.a += a;
        self.b += b;
        self.aa += a * a;
        self.bb += b * b;
        self.ab += a * b;
    }

    fn merge(mut self, o: Sums) -> Sums {
        self.n += o.n;
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
        self.hits += o.hits;
        self.excluded += o.excluded;
        self
    }

    /// Ratio of means and its delta-method standard error.
    fn ratio(&self) -> (f64, f64) {
        let (ma, mb) = (self.a / self.n, self.b / self.n);
        let q = ma / mb;
        let va = self.aa / self.n - ma * ma;
        let vb = self.bb / self.n - mb * mb;
        let cab = self.ab / self.n - ma * mb;
        let var = (va - 2.0 * q * cab + q * q * vb) / (mb * mb * self.n);
        (q, var.max(0.0).sqrt())
    }
}

fn sample_box(
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    seed: u64,
    f: impl Fn(&[f64]) -> Option<(f64, f64)> + Sync,
) -> Sums {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_stream(seed, c as u64);
            let mut s = Sums::default();
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                match f(&x) {
                    Some((a, b)) => {
                        if a > 0.0 {
                            s.hits += 1;
                        }
                        s.push(a, b);
                    }
                    None => {
                        s.excluded += 1;
                        s.push(0.0, 0.0);
                    }
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Sums::default(), Sums::merge)
}

/// Estimates `|F⁻¹E|` and `H^n(E)` for `E = B_A(minv f(y0), r)`,
/// `F = minv f ∘ f`, and checks `|F⁻¹E| / H^n(E) ≤ d(1 + 3σ)` with `σ`
/// the relative standard error of the ratio.
pub fn preimage_measure_check(
    f: &BranchedCover,
    y0: &[f64],
    r: f64,
    settings: &PreimageMeasureSettings,
) -> Result<CheckReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let z = f.minv(y0)?;
    let n = f.n();
    let d = f.degree() as f64;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for e in z.entries() {
        for i in 0..n {
            lo[i] = lo[i].min(e.x[i] - r);
            hi[i] = hi[i].max(e.x[i] + r);
        }
    }
    let volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();

    // x-space: indicator of F⁻¹E and the pulled-back area integrand
    let x_sums = sample_box(&lo, &hi, settings.samples, settings.seed, |x| {
        if !f.in_domain(x) {
            return Some((0.0, 0.0));
        }
        let y = f.eval(x).ok()?;
        let fx = f.minv(&y).ok()?;
        if distance_value(&fx, &z).ok()? >= r {
            return Some((0.0, 0.0));
        }
        let jm = f.minv_jacobian(&y).ok()?;
        let jf = f.jacobian(x).ok()?;
        Some((1.0, jm * jf / d))
    });
    let lhs = volume * x_sums.a / x_sums.n;
    let rhs = volume * x_sums.b / x_sums.n;
    let (ratio, se) = x_sums.ratio();
    let sigma = if ratio > 0.0 { se / ratio } else { f64::INFINITY };

    // independent y-space estimate of H^n(E) = ∫_{minv f⁻¹E} 𝐉minv f dy
    let (mut ylo, mut yhi) = (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n]);
    let probe = crate::numeric::halton_in_box(4096, &lo, &hi);
    for x in &probe {
        if let Ok(y) = f.eval(x) {
            if let (Ok(fx), true) = (f.minv(&y), f.in_image(&y)) {
                if distance_value(&fx, &z).map(|v| v < r).unwrap_or(false) {
                    for i in 0..n {
                        ylo[i] = ylo[i].min(y[i]);
                        yhi[i] = yhi[i].max(y[i]);
                    }
                }
            }
        }
    }
    let mut hn_y = f64::NAN;
    let mut hn_y_se = f64::NAN;
    if ylo.iter().all(|v| v.is_finite()) {
        for i in 0..n {
            let pad = 0.1 * (yhi[i] - ylo[i]) + 1e-9;
            ylo[i] -= pad;
            yhi[i] += pad;
        }
        let yvol: f64 = ylo.iter().zip(&yhi).map(|(a, b)| b - a).product();
        let y_sums = sample_box(&ylo, &yhi, settings.samples, settings.seed ^ 0x5eed, |y| {
            if !f.in_image(y) {
                return Some((0.0, 0.0));
            }
            let fy = f.minv(y).ok()?;
            if distance_value(&fy, &z).ok()? >= r {
                return Some((0.0, 0.0));
            }
            Some((f.minv_jacobian(y).ok()?, 0.0))
        });
        let mean = y_sums.a / y_sums.n;
        let var = (y_sums.aa / y_sums.n - mean * mean).max(0.0);
        hn_y = yvol * mean;
        hn_y_se = yvol * (var / y_sums.n).sqrt();
    }

    let mut report = CheckReport::new("preimage_measure", "prop-preimage-measure");
    report.n_samples = settings.samples as u64;
    report.excluded = x_sums.excluded as u64;
    report.max_ratio = ratio;
    report.metric("preimage_measure", lhs);
    report.metric("hausdorff_measure", rhs);
    report.metric("hausdorff_measure_y_space", hn_y);
    report.metric("hausdorff_measure_y_space_se", hn_y_se);
    report.metric("ratio", ratio);
    report.metric("ratio_relative_se", sigma);
    report.metric("hits", x_sums.hits as f64);
    report.threshold("degree", d);
    report.threshold("ratio_bound", d * (1.0 + 3.0 * sigma));
    report.pass = ratio <= d * (1.0 + 3.0 * sigma);
    if x_sums.hits < settings.min_hits {
        report.pass = false;
        report.note(format!("under-sampled: {} hits, need {}", x_sums.hits, settings.min_hits));
    }
    if x_sums.excluded > 0 {
        report.note("samples on the branch set excluded (measure zero)");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_ratio_is_exactly_one() {
        let id = BranchedCover::identity();
        let s = PreimageMeasureSettings { samples: 20_000, ..Default::default() };
        let rep = preimage_measure_check(&id, &[0.3, 0.1], 0.5, &s).unwrap();
        assert_eq!(rep.metrics["ratio"], 1.0);
        assert!(rep.pass);
        let exact = std::f64::consts::PI * 0.25;
        assert!((rep.metrics["preimage_measure"] - exact).abs() < 0.03);
    }

    #[test]
    fn square_map_ratio_is_at_most_two() {
        let f = BranchedCover::power(2);
        let s = PreimageMeasureSettings { samples: 40_000, ..Default::default() };
        let rep = preimage_measure_check(&f, &[1.0, 0.0], 0.2, &s).unwrap();
        assert!(rep.pass, "{rep:?}");
        let y = rep.metrics["hausdorff_measure_y_space"];
        let x = rep.metrics["hausdorff_measure"];
        assert!((x - y).abs() < 0.05 * x, "{x} vs {y}");
    }
}
