use serde::{Deserialize, Serialize};

use super::covector::KCovector;
use crate::almgren::next_permutation;
use crate::error::{Error, Result};

/// Which block permutations a form is known to be invariant under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariance {
    /// The full symmetric group `S_d`.
    Full,
    /// `S_{d0} × S_{d1}` acting on the first `d0` and last `d1` blocks.
    Split(usize, usize),
    None,
}

/// A finite group of block permutations acting on `(R^n)^d` by
/// `σ·(x_1, …, x_d) = (x_{σ⁻¹(1)}, …, x_{σ⁻¹(d)})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    n: usize,
    d: usize,
    elements: Vec<Vec<usize>>,
    tag: Invariance,
}

/// Inverse permutation.
pub fn inverse(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s] = i;
    }
    inv
}

fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..d).collect();
    let mut out = vec![perm.clone()];
    while next_permutation(&mut perm) {
        out.push(perm.clone());
    }
    out
}

/// Largest `d` for which the full symmetric group is enumerated.
pub const MAX_GROUP_DEGREE: usize = 8;

impl GroupAction {
    /// `S_d` acting on `(R^n)^d`.
    pub fn full(n: usize, d: usize) -> Result<Self> {
        if d > MAX_GROUP_DEGREE {
            return Err(Error::TooLarge { d, limit: MAX_GROUP_DEGREE });
        }
        Ok(GroupAction { n, d, elements: all_permutations(d), tag: Invariance::Full })
    }

    /// `S_{d0} × S_{d1}` acting on `(R^n)^{d0+d1}`.
    pub fn split(n: usize, d0: usize, d1: usize) -> Result<Self> {
        if d0.max(d1) > MAX_GROUP_DEGREE {
            return Err(Error::TooLarge { d: d0.max(d1), limit: MAX_GROUP_DEGREE });
        }
        let mut elements = Vec::new();
        for s0 in all_permutations(d0) {
            for s1 in all_permutations(d1) {
                let mut s = s0.clone();
                s.extend(s1.iter().map(|j| j + d0));
                elements.push(s);
            }
        }
        Ok(GroupAction { n, d: d0 + d1, elements, tag: Invariance::Split(d0, d1) })
    }

    /// The group described by an invariance tag (`None` gives the trivial group).
    pub fn from_tag(n: usize, d: usize, tag: Invariance) -> Result<Self> {
        match tag {
            Invariance::Full => Self::full(n, d),
            Invariance::Split(d0, d1) if d0 + d1 == d => Self::split(n, d0, d1),
            Invariance::Split(d0, d1) => Err(Error::InvalidArgument(format!(
                "split ({d0},{d1}) does not partition {d} blocks"
            ))),
            Invariance::None => Ok(GroupAction { n, d, elements: vec![(0..d).collect()], tag }),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn tag(&self) -> Invariance {
        self.tag
    }

    /// `σ·x` for a point (or tangent vector) of `(R^n)^d`.
    pub fn act(&self, sigma: &[usize], x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let inv = inverse(sigma);
        let mut out = vec![0.0; x.len()];
        for j in 0..self.d {
            out[j * n..(j + 1) * n].copy_from_slice(&x[inv[j] * n..(inv[j] + 1) * n]);
        }
        out
    }

    /// `γ^*α` for a constant covector `α`: `dx_{(j,c)} ↦ dx_{(σ⁻¹(j),c)}`.
    pub fn pullback_covector(&self, sigma: &[usize], alpha: &KCovector) -> KCovector {
        let n = self.n;
        let inv = inverse(sigma);
        alpha.reindex(alpha.dim(), |i| inv[i / n] * n + i % n)
    }

    /// True if the elements are closed under composition.
    pub fn is_closed(&self) -> bool {
        self.elements.iter().all(|a| {
            self.elements.iter().all(|b| {
                let comp: Vec<usize> = b.iter().map(|&j| a[j]).collect();
                self.elements.contains(&comp)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_orders_and_closure() {
        assert_eq!(GroupAction::full(2, 3).unwrap().order(), 6);
        let s = GroupAction::split(1, 2, 2).unwrap();
        assert_eq!(s.order(), 4);
        assert!(s.is_closed());
        assert!(GroupAction::full(1, 4).unwrap().is_closed());
        assert!(GroupAction::full(1, 9).is_err());
    }

    #[test]
    fn action_moves_blocks() {
        let g = GroupAction::full(2, 3).unwrap();
        // σ = (0→1, 1→2, 2→0): block 1 of σ·x is x_{σ⁻¹(1)} = x_0
        let x = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5];
        assert_eq!(g.act(&[1, 2, 0], &x), vec![3.0, 3.5, 1.0, 1.5, 2.0, 2.5]);
    }

    #[test]
    fn action_is_an_isometry_and_covector_pullback_is_consistent() {
        let g = GroupAction::full(2, 2).unwrap();
        let sigma = &g.elements()[1];
        let alpha = KCovector::elementary(4, &[0, 3], 1.0).unwrap();
        let v1 = vec![0.1, 0.2, 0.3, 0.4];
        let v2 = vec![-1.0, 0.5, 2.0, 0.7];
        let pulled = g.pullback_covector(sigma, &alpha);
        let lhs = pulled.eval(&[v1.clone(), v2.clone()]);
        let rhs = alpha.eval(&[g.act(sigma, &v1), g.act(sigma, &v2)]);
        assert!((lhs - rhs).abs() < 1e-15);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        assert_eq!(norm(&g.act(sigma, &v2)), norm(&v2));
    }
}
