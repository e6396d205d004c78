//! Lifting paths through a branched cover by predictor–corrector
//! continuation.
//!
//! At each step the fiber over `γ(t + h)` is matched to the linearly
//! extrapolated lift positions by optimal assignment. A step is accepted when
//! no lift moves more than half the smallest gap between distinct fiber
//! points; otherwise it is halved. Lifts that have merged at a branch point
//! are not separated by the gap test: on the far side they are re-split by
//! matching to their predicted positions.

use serde::{Deserialize, Serialize};

use super::catalog::BranchedCover;
use crate::almgren::{distance_value, AlmgrenPoint};
use crate::assignment;
use crate::error::{Error, Result};
use crate::numeric::dist;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Fiber points closer than this are treated as merged.
    pub merge_gap: f64,
}

impl Default for LiftSettings {
    fn default() -> Self {
        LiftSettings { initial_step: 1e-2, min_step: 1e-8, max_step: 2e-2, merge_gap: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPath {
    pub times: Vec<f64>,
    /// `γ(t)` at each output time.
    pub base: Vec<Vec<f64>>,
    /// `lifts[j][i]` is the `j`-th lift at `times[i]`.
    pub lifts: Vec<Vec<Vec<f64>>>,
    /// Local index of each lift's starting point.
    pub start_index: Vec<usize>,
    /// Largest displacement of a single lift in one accepted step.
    pub max_jump: f64,
    /// `monodromy[j]`: the starting lift whose initial point lift `j` ends at.
    pub monodromy: Vec<usize>,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl LiftedPath {
    pub fn degree(&self) -> usize {
        self.lifts.len()
    }

    /// True if some lift ends where a different lift started.
    pub fn has_monodromy(&self) -> bool {
        self.monodromy.iter().enumerate().any(|(j, &m)| j != m)
    }

    /// Largest `|f(lift_j(t)) − γ(t)|` over all samples.
    pub fn residual(&self, f: &BranchedCover) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for lift in &self.lifts {
            for (x, y) in lift.iter().zip(&self.base) {
                worst = worst.max(dist(&f.eval(x)?, y));
            }
        }
        Ok(worst)
    }
}

/// Matching of `from` to `to` minimizing squared displacement, lex-smallest
/// among ties: `out[j]` is the index in `to` assigned to `from[j]`.
fn match_points(from: &[Vec<f64>], to: &[Vec<f64>]) -> Vec<usize> {
    let d = from.len();
    let mut cost = Vec::with_capacity(d * d);
    let mut scale: f64 = 0.0;
    for a in from {
        for b in to {
            let c = dist(a, b).powi(2);
            scale = scale.max(c);
            cost.push(c);
        }
    }
    assignment::solve_lex_smallest(&cost, d, 1e-12 * (1.0 + scale))
}

/// Lifts `γ` through `f`, recording the lifts at `times` (sorted, in
/// `[0, 1]`, first entry `0`).
pub fn lift_path(
    f: &BranchedCover,
    gamma: impl Fn(f64) -> Vec<f64>,
    times: &[f64],
    settings: &LiftSettings,
) -> Result<LiftedPath> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::InvalidArgument("output times must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || *times.last().expect("non-empty") > 1.0 {
        return Err(Error::InvalidArgument("output times must increase within [0, 1]".into()));
    }
    let start = f.minv(&gamma(0.0))?;
    let start_index: Vec<usize> = start.entries().iter().flat_map(|e| std::iter::repeat_n(e.w, e.w)).collect();
    let initial = start.expand();
    let d = initial.len();
    let mut pos = initial.clone();
    let mut vel: Vec<Vec<f64>> = vec![vec![0.0; f.n()]; d];

    let mut out_times = vec![0.0];
    let mut base = vec![gamma(0.0)];
    let mut lifts: Vec<Vec<Vec<f64>>> = pos.iter().map(|p| vec![p.clone()]).collect();
    let mut t = 0.0;
    let mut h = settings.initial_step;
    let mut max_jump: f64 = 0.0;
    let (mut steps, mut rejected) = (0usize, 0usize);

    for &target in &times[1..] {
        while t < target {
            let t_next = (t + h).min(target);
            let dt = t_next - t;
            let y = gamma(t_next);
            let fiber = f.minv(&y)?.expand();
            let predicted: Vec<Vec<f64>> =
                pos.iter().zip(&vel).map(|(p, v)| p.iter().zip(v).map(|(a, b)| a + dt * b).collect()).collect();
            let sigma = match_points(&predicted, &fiber);
            let moved: Vec<f64> = (0..d).map(|j| dist(&pos[j], &fiber[sigma[j]])).collect();
            let jump = moved.iter().cloned().fold(0.0, f64::max);

            // Smallest gap between fiber points whose lifts are currently
            // apart; lifts sitting together may split freely.
            let mut gap = f64::INFINITY;
            for i in 0..d {
                for j in i + 1..d {
                    if dist(&pos[i], &pos[j]) < settings.merge_gap {
                        continue;
                    }
                    let g = dist(&fiber[sigma[i]], &fiber[sigma[j]]);
                    if g > settings.merge_gap {
                        gap = gap.min(g);
                    }
                }
            }
            if jump <= 0.5 * gap {
                for j in 0..d {
                    let next = fiber[sigma[j]].clone();
                    vel[j] = next.iter().zip(&pos[j]).map(|(a, b)| (a - b) / dt).collect();
                    pos[j] = next;
                }
                t = t_next;
                max_jump = max_jump.max(jump);
                steps += 1;
                h = (2.0 * h).min(settings.max_step);
            } else {
                rejected += 1;
                h = 0.5 * dt;
                if h < settings.min_step {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        out_times.push(target);
        base.push(gamma(target));
        for (lift, p) in lifts.iter_mut().zip(&pos) {
            lift.push(p.clone());
        }
    }

    let monodromy = match_points(&pos, &initial);
    Ok(LiftedPath {
        times: out_times,
        base,
        lifts,
        start_index,
        max_jump,
        monodromy,
        steps,
        rejected_steps: rejected,
    })
}

/// Lifts the circle `|y − c| = r` (once around, `m` steps) and checks that
/// `minv f∘γ` closes up as a loop in `A_d(Rⁿ)` while the individual lifts
/// are permuted, that every lift stays in the fiber and that the lifts
/// reproduce `minv f` at each sample.
pub fn monodromy_check(
    f: &BranchedCover,
    center: &[f64],
    radius: f64,
    m: usize,
    expect_monodromy: bool,
    tol: f64,
) -> Result<CheckReport> {
    if f.n() != 2 || center.len() != 2 {
        return Err(Error::InvalidArgument("monodromy loops are planar circles".into()));
    }
    if !(radius > 0.0) || m < 4 {
        return Err(Error::InvalidArgument("need a positive radius and at least 4 steps".into()));
    }
    let (cx, cy) = (center[0], center[1]);
    let gamma = |t: f64| {
        let a = 2.0 * std::f64::consts::PI * t;
        vec![cx + radius * a.cos(), cy + radius * a.sin()]
    };
    let lp = lift_path(f, gamma, &uniform_times(m), &LiftSettings::default())?;
    let last = lp.times.len() - 1;
    let start = AlmgrenPoint::from_points(2, lp.lifts.iter().map(|l| l[0].clone()).collect())?;
    let end = AlmgrenPoint::from_points(2, lp.lifts.iter().map(|l| l[last].clone()).collect())?;
    let closure = distance_value(&start, &end)?;
    let mut fiber_gap: f64 = 0.0;
    for (i, y) in lp.base.iter().enumerate() {
        let lifted = AlmgrenPoint::from_points(2, lp.lifts.iter().map(|l| l[i].clone()).collect())?;
        fiber_gap = fiber_gap.max(distance_value(&lifted, &f.minv(y)?)?);
    }
    // a lift that ends at another lift's start: its own endpoint displacement
    let endpoint_swap = lp.lifts.iter().map(|l| dist(&l[0], &l[last])).fold(0.0, f64::max);
    let residual = lp.residual(f)?;
    let detected = lp.has_monodromy();
    let mut report = CheckReport::new("monodromy", "prop-lifts");
    report.n_samples = (lp.times.len() * lp.degree()) as u64;
    report.max_ratio = f64::NAN;
    report
        .metric("has_monodromy", detected as u8 as f64)
        .metric("loop_closure", closure)
        .metric("max_endpoint_displacement", endpoint_swap)
        .metric("fiber_gap", fiber_gap)
        .metric("residual", residual)
        .metric("max_jump", lp.max_jump)
        .metric("steps", lp.steps as f64);
    report.threshold("tol", tol);
    report.note(format!("monodromy permutation {:?}", lp.monodromy));
    report.pass = detected == expect_monodromy && closure <= tol && fiber_gap <= tol && residual <= tol;
    Ok(report)
}

/// `m + 1` equally spaced times in `[0, 1]`.
pub fn uniform_times(m: usize) -> Vec<f64> {
    (0..=m).map(|i| i as f64 / m as f64).collect()
}
