use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::almgren::AlmgrenPoint;
use crate::covers::BranchedCover;
use crate::error::{Error, Result};
use crate::numeric::{norm, op_norm};
use crate::region::Region;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Result<AlmgrenPoint> + Send + Sync>;

/// Branch values with their differentials, in any order.
pub type BranchFn = Arc<dyn Fn(&[f64]) -> Result<Vec<(Vec<f64>, DMatrix<f64>)>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    InverseOfCover,
    SyntheticLipschitz,
    Interpolated,
}

/// A map `U ⊂ R^m → A_d(R^n)` given pointwise.
#[derive(Clone)]
pub struct MultiValuedMap {
    m: usize,
    n: usize,
    d: usize,
    eval: EvalFn,
    branches: Option<BranchFn>,
    provenance: Provenance,
    domain: Region,
    lipschitz: Option<f64>,
    cover: Option<BranchedCover>,
}

impl fmt::Debug for MultiValuedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiValuedMap")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("provenance", &self.provenance)
            .field("domain", &self.domain)
            .field("exact_branches", &self.branches.is_some())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl MultiValuedMap {
    pub fn from_fn(
        m: usize,
        n: usize,
        d: usize,
        domain: Region,
        provenance: Provenance,
        eval: impl Fn(&[f64]) -> Result<AlmgrenPoint> + Send + Sync + 'static,
    ) -> Result<Self> {
        domain.validate()?;
        if domain.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: domain.dim() });
        }
        Ok(MultiValuedMap {
            m,
            n,
            d,
            eval: Arc::new(eval),
            branches: None,
            provenance,
            domain,
            lipschitz: None,
            cover: None,
        })
    }

    /// Attaches exact branch differentials.
    pub fn with_branches(
        mut self,
        branches: impl Fn(&[f64]) -> Result<Vec<(Vec<f64>, DMatrix<f64>)>> + Send + Sync + 'static,
    ) -> Self {
        self.branches = Some(Arc::new(branches));
        self
    }

    pub fn without_branches(mut self) -> Self {
        self.branches = None;
        self
    }

    /// Records a known Lipschitz bound.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// `minv f` on `domain ⊂ f(Ω)`, with exact branch differentials
    /// `Df(x_j)⁻¹` off the branch values.
    pub fn inverse_of(cover: &BranchedCover, domain: Region) -> Result<Self> {
        let n = cover.n();
        let f = cover.clone();
        let g = cover.clone();
        let mut map = Self::from_fn(n, n, cover.degree(), domain, Provenance::InverseOfCover, move |y| f.minv(y))?
            .with_branches(move |y| g.branches(y));
        map.cover = Some(cover.clone());
        Ok(map)
    }

    /// `x ↦ Σ_j ⟦A_j x + b_j⟧`, a Lipschitz map with exact differentials.
    pub fn affine_branches(domain: Region, a: Vec<DMatrix<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let first = a.first().ok_or_else(|| Error::InvalidArgument("need at least one branch".into()))?;
        let (n, m) = first.shape();
        if a.iter().any(|x| x.shape() != (n, m)) || b.len() != a.len() || b.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidArgument("inconsistent affine branch shapes".into()));
        }
        let d = a.len();
        let lip = a.iter().map(|x| op_norm(x).powi(2)).sum::<f64>().sqrt();
        let (a2, b2) = (a.clone(), b.clone());
        let values = move |x: &[f64], a: &[DMatrix<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter()
                .zip(b)
                .map(|(aj, bj)| (0..n).map(|i| (0..m).map(|c| aj[(i, c)] * x[c]).sum::<f64>() + bj[i]).collect())
                .collect()
        };
        let eval = move |x: &[f64]| AlmgrenPoint::from_points(n, values(x, &a, &b));
        let branches = move |x: &[f64]| Ok(values(x, &a2, &b2).into_iter().zip(a2.iter().cloned()).collect());
        Ok(Self::from_fn(m, n, d, domain, Provenance::SyntheticLipschitz, eval)?
            .with_branches(branches)
            .with_lipschitz(lip))
    }

    /// `x ↦ Σ_j ⟦Ax + b + s(x) w_j⟧` with `s(x) = |⟨c, x⟩ − t|` and
    /// `Σ_j w_j = 0`: a Lipschitz map that touches the diagonal along the
    /// hyperplane `⟨c, x⟩ = t`. Lipschitz constant
    /// `(d‖A‖² + |c|² Σ|w_j|²)^{1/2}`.
    pub fn folded(
        domain: Region,
        a: DMatrix<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        t: f64,
        w: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (n, m) = a.shape();
        let d = w.len();
        if d == 0 || b.len() != n || c.len() != m || w.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidArgument("inconsistent fold parameters".into()));
        }
        let sum: Vec<f64> = (0..n).map(|i| w.iter().map(|v| v[i]).sum()).collect();
        if norm(&sum) > 1e-12 * (1.0 + w.iter().map(|v| norm(v)).sum::<f64>()) {
            return Err(Error::InvalidArgument("fold directions must sum to zero".into()));
        }
        let w2: f64 = w.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum();
        let lip = (d as f64 * op_norm(&a).powi(2) + norm(&c).powi(2) * w2).sqrt();
        let eval = move |x: &[f64]| {
            let s = (c.iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>() - t).abs();
            let base: Vec<f64> = (0..n).map(|i| (0..m).map(|k| a[(i, k)] * x[k]).sum::<f64>() + b[i]).collect();
            let pts = w.iter().map(|wj| base.iter().zip(wj).map(|(p, q)| p + s * q).collect()).collect();
            AlmgrenPoint::from_points(n, pts)
        };
        Ok(Self::from_fn(m, n, d, domain, Provenance::SyntheticLipschitz, eval)?.with_lipschitz(lip))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn cover(&self) -> Option<&BranchedCover> {
        self.cover.as_ref()
    }

    pub fn has_exact_branches(&self) -> bool {
        self.branches.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<AlmgrenPoint> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: x.len() });
        }
        let p = (self.eval)(x)?;
        if p.d() != self.d || p.n() != self.n {
            return Err(Error::WeightMismatch { left: self.d, right: p.d() });
        }
        Ok(p)
    }

    pub(crate) fn exact_branches(&self, x: &[f64]) -> Option<Result<Vec<(Vec<f64>, DMatrix<f64>)>>> {
        self.branches.as_ref().map(|b| b(x))
    }

    pub(crate) fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}
