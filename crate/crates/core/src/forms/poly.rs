//! Differential forms with polynomial coefficients. These have exact
//! exterior derivatives and are closed under the group actions, which makes
//! them the reference objects for checking derivative identities.

use std::collections::BTreeMap;

use super::covector::{sort_with_sign, KCovector};
use super::group::GroupAction;
use crate::error::{Error, Result};

/// Real polynomial in `nvars` variables, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// `c · x^pow`.
    pub fn monomial(nvars: usize, pow: Vec<u32>, c: f64) -> Self {
        assert_eq!(pow.len(), nvars, "exponent vector length");
        let mut p = Self::zero(nvars);
        if c != 0.0 {
            p.terms.insert(pow, c);
        }
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut pow = vec![0; nvars];
        pow[i] = 1;
        Self::monomial(nvars, pow, 1.0)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|p| p.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(pow, c)| {
                c * pow
                    .iter()
                    .zip(x)
                    .filter(|(e, _)| **e > 0)
                    .map(|(&e, &xi)| xi.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    fn insert(&mut self, pow: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(pow.clone()).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&pow);
        }
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (pow, c) in &self.terms {
            if pow[i] > 0 {
                let mut p = pow.clone();
                p[i] -= 1;
                out.insert(p, c * pow[i] as f64);
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (pow, v) in &self.terms {
            out.insert(pow.clone(), c * v);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (pow, v) in &other.terms {
            out.insert(pow.clone(), *v);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                let pow: Vec<u32> = p.iter().zip(q).map(|(x, y)| x + y).collect();
                out.insert(pow, a * b);
            }
        }
        out
    }

    /// Substitutes `x_i ↦ x_{map(i)}` in a space with `new_nvars` variables.
    pub fn map_vars(&self, new_nvars: usize, map: impl Fn(usize) -> usize) -> Self {
        let mut out = Self::zero(new_nvars);
        for (pow, c) in &self.terms {
            let mut p = vec![0; new_nvars];
            for (i, &e) in pow.iter().enumerate() {
                p[map(i)] += e;
            }
            out.insert(p, *c);
        }
        out
    }
}

/// A `k`-form on `R^N` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    dim: usize,
    k: usize,
    terms: BTreeMap<Vec<usize>, Polynomial>,
}

impl PolyForm {
    pub fn zero(dim: usize, k: usize) -> Self {
        PolyForm { dim, k, terms: BTreeMap::new() }
    }

    /// `p · dx_I` for indices in any order.
    pub fn term(dim: usize, indices: &[usize], p: Polynomial) -> Result<Self> {
        if p.nvars() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.nvars() });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidArgument(format!("index {bad} out of range for dimension {dim}")));
        }
        let mut out = Self::zero(dim, indices.len());
        out.add_term(indices, &p);
        Ok(out)
    }

    /// Constant-coefficient form with the given value.
    pub fn constant(cov: &KCovector) -> Self {
        let mut out = Self::zero(cov.dim(), cov.degree());
        for (idx, c) in cov.terms() {
            out.add_term(idx, &Polynomial::constant(cov.dim(), *c));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Polynomial> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if every coefficient is constant.
    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|p| p.degree() == 0)
    }

    fn add_term(&mut self, indices: &[usize], p: &Polynomial) {
        let mut idx = indices.to_vec();
        let sign = sort_with_sign(&mut idx);
        if sign == 0 || p.is_zero() {
            return;
        }
        let q = p.scale(sign as f64);
        let merged = match self.terms.remove(&idx) {
            Some(old) => old.add(&q),
            None => q,
        };
        if !merged.is_zero() {
            self.terms.insert(idx, merged);
        }
    }

    pub fn eval(&self, x: &[f64]) -> KCovector {
        let mut out = KCovector::zero(self.dim, self.k);
        for (idx, p) in &self.terms {
            out.add_term(idx, p.eval(x));
        }
        out
    }

    /// Exact exterior derivative `Σ_I Σ_i ∂_i p_I dx_i ∧ dx_I`.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(self.dim, self.k + 1);
        if self.k + 1 > self.dim {
            return out;
        }
        let mut idx = Vec::with_capacity(self.k + 1);
        for (i_set, p) in &self.terms {
            for i in 0..self.dim {
                let dp = p.partial(i);
                if dp.is_zero() {
                    continue;
                }
                idx.clear();
                idx.push(i);
                idx.extend_from_slice(i_set);
                out.add_term(&idx, &dp);
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.dim, self.k);
        for (idx, p) in &self.terms {
            out.add_term(idx, &p.scale(c));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.k != other.k {
            return Err(Error::FormMismatch(format!(
                "cannot add a {}-form on R^{} to a {}-form on R^{}",
                self.k, self.dim, other.k, other.dim
            )));
        }
        let mut out = self.clone();
        for (idx, p) in &other.terms {
            out.add_term(idx, p);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.k + other.k > self.dim {
            return Err(Error::DegreeOverflow { k1: self.k, k2: other.k, dim: self.dim });
        }
        let mut out = Self::zero(self.dim, self.k + other.k);
        let mut idx = Vec::new();
        for (i, p) in &self.terms {
            for (j, q) in &other.terms {
                idx.clear();
                idx.extend_from_slice(i);
                idx.extend_from_slice(j);
                out.add_term(&idx, &p.mul(q));
            }
        }
        Ok(out)
    }

    /// Relabels both coordinates and form indices through `map`.
    pub fn reindex(&self, new_dim: usize, map: impl Fn(usize) -> usize + Copy) -> Self {
        let mut out = Self::zero(new_dim, self.k);
        for (idx, p) in &self.terms {
            let mapped: Vec<usize> = idx.iter().map(|&i| map(i)).collect();
            out.add_term(&mapped, &p.map_vars(new_dim, map));
        }
        out
    }

    /// `γ^*ω` for the block permutation `γ` given by `sigma`.
    pub fn pullback_by(&self, action: &GroupAction, sigma: &[usize]) -> Self {
        let n = action.n();
        let inv = super::group::inverse(sigma);
        let inv = &inv;
        self.reindex(self.dim, move |i| inv[i / n] * n + i % n)
    }

    /// `P_Γ ω = |Γ|^{-1} Σ_γ γ^*ω`.
    pub fn symmetrize(&self, action: &GroupAction) -> Result<Self> {
        if action.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: action.dim() });
        }
        let mut out = Self::zero(self.dim, self.k);
        for sigma in action.elements() {
            out = out.add(&self.pullback_by(action, sigma))?;
        }
        Ok(out.scale(1.0 / action.order() as f64))
    }

    /// `tr(α) = Σ_j P_j^*α` for a form on `R^n`, giving a form on `(R^n)^d`.
    pub fn trace(&self, d: usize) -> Self {
        let n = self.dim;
        let mut out = Self::zero(n * d, self.k);
        for j in 0..d {
            let shifted = self.reindex(n * d, move |i| j * n + i);
            out = out.add(&shifted).expect("same space");
        }
        out
    }

    /// `P_0^*ω_0 ∧ P_1^*ω_1` on the product space.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n0 = self.dim;
        let total = n0 + other.dim;
        let left = self.reindex(total, |i| i);
        let right = other.reindex(total, move |i| n0 + i);
        left.wedge(&right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_arithmetic() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let p = x.mul(&x).add(&y.scale(3.0)); // x² + 3y
        assert_eq!(p.eval(&[2.0, 1.0]), 7.0);
        assert_eq!(p.partial(0).eval(&[2.0, 1.0]), 4.0);
        assert_eq!(p.partial(1).eval(&[5.0, 5.0]), 3.0);
        assert_eq!(p.degree(), 2);
        assert!(p.add(&p.scale(-1.0)).is_zero());
        let swapped = p.map_vars(2, |i| 1 - i); // y² + 3x
        assert_eq!(swapped.eval(&[2.0, 1.0]), 1.0 + 6.0);
    }

    #[test]
    fn d_of_linear_trace_form() {
        // tr(x1 dx2) on (R²)², d = tr(dx1 ∧ dx2)
        let alpha = PolyForm::term(2, &[1], Polynomial::var(2, 0)).unwrap();
        let d_trace = alpha.trace(2).d();
        let trace_d = alpha.d().trace(2);
        assert_eq!(d_trace, trace_d);
        let v = d_trace.eval(&[0.3, 0.1, -2.0, 4.0]);
        assert_eq!(v.coefficient(&[0, 1]), 1.0);
        assert_eq!(v.coefficient(&[2, 3]), 1.0);
        assert_eq!(v.terms().len(), 2);
    }

    #[test]
    fn d_squared_vanishes() {
        let x = Polynomial::var(3, 0);
        let y = Polynomial::var(3, 1);
        let z = Polynomial::var(3, 2);
        let w = PolyForm::term(3, &[2], x.mul(&y).mul(&y))
            .unwrap()
            .add(&PolyForm::term(3, &[0], z.mul(&x).scale(-2.0)).unwrap())
            .unwrap();
        assert!(w.d().d().is_zero());
    }

    #[test]
    fn trace_with_one_copy_is_identity() {
        let alpha = PolyForm::term(2, &[0, 1], Polynomial::var(2, 1)).unwrap();
        assert_eq!(alpha.trace(1), alpha);
    }
}
