use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::det;

/// A constant alternating `k`-covector on `R^N`, stored sparsely over
/// strictly increasing index tuples (0-based).
///
/// Evaluation uses the determinant convention:
/// `dx_I(v_1, …, v_k) = det[v_l(i_m)]`, so `dx_1 ∧ dx_2 (e_1, e_2) = 1`.
#[derive(Clone, PartialEq, Default)]
pub struct KCovector {
    dim: usize,
    k: usize,
    terms: BTreeMap<Vec<usize>, f64>,
}

impl fmt::Debug for KCovector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KCovector(N={}, k={}, {:?})", self.dim, self.k, self.terms)
    }
}

/// Sorts `idx` in place and returns the sign of the sorting permutation, or
/// `0` if an index repeats.
pub(crate) fn sort_with_sign(idx: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

/// All strictly increasing `k`-subsets of `0..m`, in lexicographic order.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(m, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= m {
        rec(m, k, 0, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

impl KCovector {
    pub fn zero(dim: usize, k: usize) -> Self {
        KCovector { dim, k, terms: BTreeMap::new() }
    }

    /// The scalar `c` as a 0-covector.
    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut out = Self::zero(dim, 0);
        out.add_term(&[], c);
        out
    }

    /// `c · dx_{i_1} ∧ … ∧ dx_{i_k}` for indices in any order.
    pub fn elementary(dim: usize, indices: &[usize], c: f64) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidArgument(format!("index {bad} out of range for dimension {dim}")));
        }
        let mut out = Self::zero(dim, indices.len());
        out.add_term(indices, c);
        Ok(out)
    }

    /// `dx_1 ∧ … ∧ dx_N`.
    pub fn volume(dim: usize) -> Self {
        let idx: Vec<usize> = (0..dim).collect();
        let mut out = Self::zero(dim, dim);
        out.terms.insert(idx, 1.0);
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == 0.0)
    }

    /// Adds `c · dx_I`; `I` may be unsorted (the sign is absorbed).
    pub fn add_term(&mut self, indices: &[usize], c: f64) {
        debug_assert_eq!(indices.len(), self.k);
        if c == 0.0 {
            return;
        }
        let mut idx = indices.to_vec();
        let sign = sort_with_sign(&mut idx);
        if sign == 0 {
            return;
        }
        let entry = self.terms.entry(idx).or_insert(0.0);
        *entry += sign as f64 * c;
        // keep exact cancellations out of the support
        self.terms.retain(|_, v| *v != 0.0);
    }

    /// Coefficient of `dx_I` (with the sign of sorting `I`).
    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        let mut idx = indices.to_vec();
        let sign = sort_with_sign(&mut idx);
        if sign == 0 {
            return 0.0;
        }
        sign as f64 * self.terms.get(&idx).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.dim, self.k);
        if c != 0.0 {
            out.terms = self.terms.iter().map(|(i, v)| (i.clone(), c * v)).collect();
        }
        out
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.k != other.k {
            return Err(Error::FormMismatch(format!(
                "cannot combine a {}-covector on R^{} with a {}-covector on R^{}",
                self.k, self.dim, other.k, other.dim
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.scale(a);
        for (idx, v) in &other.terms {
            let e = out.terms.entry(idx.clone()).or_insert(0.0);
            *e += b * v;
        }
        out.terms.retain(|_, v| *v != 0.0);
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(1.0, other, 1.0)
    }

    /// Value on `k` vectors of length `N`.
    pub fn eval(&self, vectors: &[Vec<f64>]) -> f64 {
        debug_assert_eq!(vectors.len(), self.k);
        let k = self.k;
        let mut buf = vec![0.0; k * k];
        let mut total = 0.0;
        for (idx, c) in &self.terms {
            for (row, &i) in idx.iter().enumerate() {
                for (col, v) in vectors.iter().enumerate() {
                    buf[row * k + col] = v[i];
                }
            }
            total += c * det(&buf, k);
        }
        total
    }

    /// Wedge product in the determinant convention:
    /// `dx_I ∧ dx_J = dx_{I ∪ J}` up to the shuffle sign.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.k + other.k > self.dim {
            return Err(Error::DegreeOverflow { k1: self.k, k2: other.k, dim: self.dim });
        }
        let mut out = Self::zero(self.dim, self.k + other.k);
        let mut idx = Vec::with_capacity(out.k);
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                idx.clear();
                idx.extend_from_slice(i);
                idx.extend_from_slice(j);
                out.add_term(&idx, a * b);
            }
        }
        Ok(out)
    }

    /// Pull-back by the linear map `L: R^m → R^N` (an `N × m` matrix):
    /// `(L^*α)(u_1, …, u_k) = α(L u_1, …, L u_k)`.
    pub fn pullback(&self, l: &DMatrix<f64>) -> Result<Self> {
        if l.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: l.nrows() });
        }
        let m = l.ncols();
        let k = self.k;
        let mut out = Self::zero(m, k);
        if k > m {
            return Ok(out);
        }
        let mut buf = vec![0.0; k * k];
        for target in subsets(m, k) {
            let mut total = 0.0;
            for (idx, c) in &self.terms {
                for (r, &i) in idx.iter().enumerate() {
                    for (s, &j) in target.iter().enumerate() {
                        buf[r * k + s] = l[(i, j)];
                    }
                }
                total += c * det(&buf, k);
            }
            if total != 0.0 {
                out.terms.insert(target, total);
            }
        }
        Ok(out)
    }

    /// Relabels coordinates by `map` (into a space of dimension `new_dim`),
    /// absorbing the sign of re-sorting.
    pub fn reindex(&self, new_dim: usize, map: impl Fn(usize) -> usize) -> Self {
        let mut out = Self::zero(new_dim, self.k);
        for (idx, c) in &self.terms {
            let mapped: Vec<usize> = idx.iter().map(|&i| map(i)).collect();
            out.add_term(&mapped, *c);
        }
        out
    }

    /// Euclidean norm of the coefficient vector.
    pub fn euclidean_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, a) in &self.terms {
            m = m.max((a - other.terms.get(i).copied().unwrap_or(0.0)).abs());
        }
        for (i, b) in &other.terms {
            if !self.terms.contains_key(i) {
                m = m.max(b.abs());
            }
        }
        m
    }

    /// Gradient of `V ↦ α(v_1, …, v_k)` with respect to `v_l`.
    pub fn partial_gradient(&self, vectors: &[Vec<f64>], l: usize) -> Vec<f64> {
        let k = self.k;
        let mut grad = vec![0.0; self.dim];
        for (idx, c) in &self.terms {
            // cofactor expansion along column l
            for (r, &i) in idx.iter().enumerate() {
                let mut minor = Vec::with_capacity((k - 1) * (k - 1));
                for (rr, &ii) in idx.iter().enumerate() {
                    if rr == r {
                        continue;
                    }
                    for (cc, v) in vectors.iter().enumerate() {
                        if cc != l {
                            minor.push(v[ii]);
                        }
                    }
                }
                let sign = if (r + l) % 2 == 0 { 1.0 } else { -1.0 };
                grad[i] += c * sign * det(&minor, k - 1);
            }
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn elementary_evaluation() {
        let w = KCovector::elementary(2, &[0], 1.0)
            .unwrap()
            .wedge(&KCovector::elementary(2, &[1], 1.0).unwrap())
            .unwrap();
        assert_eq!(w.eval(&[e(2, 0), e(2, 1)]), 1.0);
        assert_eq!(w.eval(&[e(2, 1), e(2, 0)]), -1.0);
        assert_eq!(w, KCovector::volume(2));
        let swapped = KCovector::elementary(3, &[2, 0], 2.0).unwrap();
        assert_eq!(swapped.coefficient(&[0, 2]), -2.0);
        assert_eq!(swapped.coefficient(&[2, 0]), 2.0);
        assert!(KCovector::elementary(3, &[1, 1], 1.0).unwrap().is_zero());
        assert!(KCovector::elementary(3, &[3], 1.0).is_err());
    }

    #[test]
    fn wedge_degree_overflow() {
        let a = KCovector::volume(2);
        let b = KCovector::elementary(2, &[0], 1.0).unwrap();
        assert!(matches!(a.wedge(&b), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn pullback_by_identity_and_by_scaling() {
        let w = KCovector::elementary(3, &[0, 2], 1.5).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(w.pullback(&id).unwrap(), w);
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 3.0]));
        assert_eq!(w.pullback(&s).unwrap().coefficient(&[0, 2]), 1.5 * 6.0);
        // top degree pulls back by the determinant
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(KCovector::volume(2).pullback(&a).unwrap().coefficient(&[0, 1]), -2.0);
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let mut w = KCovector::zero(4, 2);
        w.add_term(&[0, 1], 1.0);
        w.add_term(&[2, 3], -0.5);
        w.add_term(&[1, 3], 2.0);
        let v = vec![vec![0.3, -0.2, 0.5, 0.1], vec![-0.4, 0.7, 0.2, 0.9]];
        for l in 0..2 {
            let g = w.partial_gradient(&v, l);
            for i in 0..4 {
                let h = 1e-6;
                let mut vp = v.clone();
                vp[l][i] += h;
                let mut vm = v.clone();
                vm[l][i] -= h;
                let fd = (w.eval(&vp) - w.eval(&vm)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn subsets_enumerate_binomially() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
    }
}
