//! Comass `‖α‖ = max { α(v_1, …, v_k) : |v_l| ≤ 1 }` of a covector.
//!
//! Closed forms are used where the maximum is known (degree 0, 1, top
//! degree, single elementary terms). Otherwise the maximum is searched by
//! multistart projected-gradient ascent on the product of unit spheres,
//! each run polished by exact blockwise maximization. The value returned is
//! `α` evaluated at an explicit unit frame, hence a certified lower bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covector::KCovector;
use super::form::KForm;
use crate::numeric::{halton_point, norm, rng_stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComassSettings {
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ComassSettings {
    fn default() -> Self {
        ComassSettings { starts: 64, tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComassResult {
    pub value: f64,
    /// Unit vectors attaining `value`.
    pub maximizer: Vec<Vec<f64>>,
    /// False if no start met the stationarity tolerance within the budget.
    pub converged: bool,
    /// True when `value` is the exact comass rather than a search result.
    pub exact: bool,
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

fn normalize(v: &mut [f64], fallback: usize) {
    let r = norm(v);
    if r > 0.0 && r.is_finite() {
        v.iter_mut().for_each(|x| *x /= r);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[fallback % v.len()] = 1.0;
    }
}

fn exact(alpha: &KCovector) -> Option<ComassResult> {
    let dim = alpha.dim();
    let k = alpha.degree();
    let done = |value: f64, maximizer: Vec<Vec<f64>>| {
        Some(ComassResult { value, maximizer, converged: true, exact: true })
    };
    if alpha.is_zero() {
        return done(0.0, (0..k).map(|l| unit(dim, l % dim.max(1))).collect());
    }
    if k == 0 {
        return done(alpha.coefficient(&[]).abs(), Vec::new());
    }
    if k == 1 {
        let c: Vec<f64> = (0..dim).map(|i| alpha.coefficient(&[i])).collect();
        let r = norm(&c);
        return done(r, vec![c.iter().map(|x| x / r).collect()]);
    }
    if alpha.terms().len() == 1 || k == dim {
        let (idx, c) = alpha.terms().iter().next().expect("non-zero covector");
        let mut frame: Vec<Vec<f64>> = idx.iter().map(|&i| unit(dim, i)).collect();
        if *c < 0.0 {
            frame[0][idx[0]] = -1.0;
        }
        return done(c.abs(), frame);
    }
    None
}

struct Run {
    value: f64,
    frame: Vec<Vec<f64>>,
    converged: bool,
}

fn ascend(alpha: &KCovector, mut frame: Vec<Vec<f64>>, settings: &ComassSettings) -> Run {
    let k = alpha.degree();
    for (l, v) in frame.iter_mut().enumerate() {
        normalize(v, l);
    }
    let mut f = alpha.eval(&frame);
    if f < 0.0 {
        frame[0].iter_mut().for_each(|x| *x = -*x);
        f = -f;
    }
    let mut step = 1.0;
    let mut converged = false;
    for _ in 0..settings.max_iter {
        // tangential gradient on the product of spheres
        let grads: Vec<Vec<f64>> = (0..k)
            .map(|l| {
                let g = alpha.partial_gradient(&frame, l);
                let radial: f64 = g.iter().zip(&frame[l]).map(|(a, b)| a * b).sum();
                g.iter().zip(&frame[l]).map(|(a, b)| a - radial * b).collect()
            })
            .collect();
        let gnorm2: f64 = grads.iter().flatten().map(|x| x * x).sum();
        if gnorm2.sqrt() <= settings.tol {
            converged = true;
            break;
        }
        // Armijo backtracking along the retraction
        let mut accepted = false;
        while step > 1e-16 {
            let trial: Vec<Vec<f64>> = frame
                .iter()
                .zip(&grads)
                .enumerate()
                .map(|(l, (v, g))| {
                    let mut w: Vec<f64> = v.iter().zip(g).map(|(a, b)| a + step * b).collect();
                    normalize(&mut w, l);
                    w
                })
                .collect();
            let ft = alpha.eval(&trial);
            if ft >= f + 1e-4 * step * gnorm2 {
                let gain = ft - f;
                frame = trial;
                f = ft;
                accepted = true;
                step *= 2.0;
                if gain <= settings.tol * settings.tol * (1.0 + f.abs()) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    // polish: each block maximized exactly with the others fixed
    for _ in 0..200 {
        let before = f;
        for l in 0..k {
            let mut g = alpha.partial_gradient(&frame, l);
            if norm(&g) == 0.0 {
                continue;
            }
            normalize(&mut g, l);
            frame[l] = g;
        }
        f = alpha.eval(&frame);
        if f - before <= 1e-15 * (1.0 + f.abs()) {
            break;
        }
    }
    Run { value: alpha.eval(&frame), frame, converged }
}

/// Comass of a constant covector.
pub fn comass_covector(alpha: &KCovector, settings: &ComassSettings) -> ComassResult {
    if let Some(r) = exact(alpha) {
        return r;
    }
    let dim = alpha.dim();
    let k = alpha.degree();
    let total = dim * k;
    let starts = settings.starts.max(1);
    let runs: Vec<Run> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let flat: Vec<f64> = if total <= 54 {
                halton_point(s, total).iter().map(|u| 2.0 * u - 1.0).collect()
            } else {
                let mut rng = rng_stream(0x636f_6d61_7373, s as u64);
                (0..total).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            let frame = flat.chunks(dim).map(|c| c.to_vec()).collect();
            ascend(alpha, frame, settings)
        })
        .collect();
    let converged = runs.iter().any(|r| r.converged);
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start");
    ComassResult { value: best.value, maximizer: best.frame, converged, exact: false }
}

/// Pointwise comass `‖ω_x‖`.
pub fn comass(form: &KForm, x: &[f64], settings: &ComassSettings) -> ComassResult {
    comass_covector(&form.eval(x), settings)
}
