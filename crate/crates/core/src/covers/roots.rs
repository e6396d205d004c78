//! Roots of complex polynomials with multiplicities.
//!
//! Eigenvalues of the companion matrix (complex Schur form), a few Newton
//! steps on each, then single-linkage clustering: roots closer than the
//! clustering radius are one root whose multiplicity is the cluster size.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `Σ c_i z^i` by Horner's rule.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Coefficients of the derivative.
pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

/// Drops vanishing leading coefficients.
pub fn trim(coeffs: &[Complex64]) -> &[Complex64] {
    let mut m = coeffs.len();
    while m > 0 && coeffs[m - 1] == Complex64::new(0.0, 0.0) {
        m -= 1;
    }
    &coeffs[..m]
}

/// Distinct roots with multiplicities, sorted by (re, im).
pub fn roots(coeffs: &[Complex64], cluster_radius: f64) -> Result<Vec<(Complex64, usize)>> {
    let c = trim(coeffs);
    if c.len() < 2 {
        return Err(Error::RootSolver("polynomial has no roots (degree 0)".into()));
    }
    let m = c.len() - 1;
    let lead = c[m];
    let mut comp = DMatrix::<Complex64>::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..m {
        comp[(i, m - 1)] = -c[i] / lead;
    }
    let eig = comp
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::RootSolver("complex Schur decomposition did not converge".into()))?;
    let dc = derivative(c);
    let mut zs: Vec<Complex64> = eig
        .iter()
        .map(|&z0| {
            let mut z = z0;
            let mut res = horner(c, z).norm();
            for _ in 0..8 {
                let dp = horner(&dc, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = z - horner(c, z) / dp;
                let r = horner(c, cand).norm();
                if !(r < res) {
                    break;
                }
                z = cand;
                res = r;
            }
            z
        })
        .collect();
    if zs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::RootSolver("non-finite eigenvalue".into()));
    }
    zs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // single-linkage clustering
    let mut label: Vec<usize> = (0..m).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            if (zs[i] - zs[j]).norm() <= cluster_radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut roots_of: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for i in 0..m {
        let r = find(&mut label, i);
        roots_of.entry(r).or_default().push(zs[i]);
    }
    for members in roots_of.values() {
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        clusters.push((mean, members.len()));
    }
    clusters.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(clusters)
}
