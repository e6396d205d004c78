use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::roots;
use crate::almgren::AlmgrenPoint;
use crate::error::{Error, Result};
use crate::numeric::{min_stretch, norm, op_norm};

/// Explicit proper branched covers with exact preimage oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogMap {
    /// `z ↦ Σ c_i z^i` on `C = R²`.
    ComplexPolynomial(Vec<Complex64>),
    /// `z ↦ z^k` on `R²`.
    PlanarPower(u32),
    /// `(r, θ, z) ↦ (r, kθ, z)` on `R³`.
    WindingMap3D(u32),
    /// `x ↦ base(Ax + b)` for an invertible orientation-preserving `A`.
    Precomposed { a: DMatrix<f64>, b: Vec<f64>, base: Box<CatalogMap> },
}

/// Where the branch values `f(B_f)` lie.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchValues {
    Points(Vec<Vec<f64>>),
    /// The `x₃`-axis of `R³`.
    Axis,
}

impl BranchValues {
    pub fn distance(&self, y: &[f64]) -> f64 {
        match self {
            BranchValues::Points(ps) => ps
                .iter()
                .map(|p| crate::numeric::dist(p, y))
                .fold(f64::INFINITY, f64::min),
            BranchValues::Axis => (y[0] * y[0] + y[1] * y[1]).sqrt(),
        }
    }
}

/// One point of a fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberPoint {
    pub x: Vec<f64>,
    pub index: usize,
}

/// A proper branched cover `f: Ω → f(Ω)` of finite degree.
///
/// By default `Ω = R^n` and every catalog map is onto. With an image radius
/// `R` the domain is `Ω = f⁻¹(B(0, R))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchedCover {
    map: CatalogMap,
    image_radius: Option<f64>,
}

fn cx(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

fn conformal_matrix(z: Complex64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[z.re, -z.im, z.im, z.re])
}

fn rotation(t: f64) -> DMatrix<f64> {
    let (s, c) = t.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

impl CatalogMap {
    fn n(&self) -> usize {
        match self {
            CatalogMap::ComplexPolynomial(_) | CatalogMap::PlanarPower(_) => 2,
            CatalogMap::WindingMap3D(_) => 3,
            CatalogMap::Precomposed { base, .. } => base.n(),
        }
    }

    fn degree(&self) -> usize {
        match self {
            CatalogMap::ComplexPolynomial(c) => roots::trim(c).len() - 1,
            CatalogMap::PlanarPower(k) | CatalogMap::WindingMap3D(k) => *k as usize,
            CatalogMap::Precomposed { base, .. } => base.degree(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CatalogMap::ComplexPolynomial(c) => {
                if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
                }
                if roots::trim(c).len() < 2 {
                    return Err(Error::InvalidArgument("polynomial must have degree at least 1".into()));
                }
                Ok(())
            }
            CatalogMap::PlanarPower(k) | CatalogMap::WindingMap3D(k) => {
                if *k == 0 {
                    return Err(Error::InvalidArgument("exponent k must be at least 1".into()));
                }
                Ok(())
            }
            CatalogMap::Precomposed { a, b, base } => {
                base.validate()?;
                let n = base.n();
                if a.nrows() != n || a.ncols() != n {
                    return Err(Error::InvalidArgument(format!("affine matrix must be {n}×{n}")));
                }
                if b.len() != n {
                    return Err(Error::InvalidArgument(format!("affine shift must have {n} entries")));
                }
                if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("affine map entries must be finite".into()));
                }
                if !(a.determinant() > 0.0) {
                    return Err(Error::InvalidArgument(
                        "affine matrix must have positive determinant (sense-preserving)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CatalogMap::ComplexPolynomial(c) => {
                let w = roots::horner(c, cx(x));
                vec![w.re, w.im]
            }
            CatalogMap::PlanarPower(k) => {
                let w = cx(x).powu(*k);
                vec![w.re, w.im]
            }
            CatalogMap::WindingMap3D(k) => {
                let w = cx(x);
                let r = w.norm();
                if r == 0.0 {
                    return vec![0.0, 0.0, x[2]];
                }
                let u = Complex64::from_polar(r, *k as f64 * w.arg());
                vec![u.re, u.im, x[2]]
            }
            CatalogMap::Precomposed { a, b, base } => base.eval(&affine(a, b, x)),
        }
    }

    fn differential(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            CatalogMap::ComplexPolynomial(c) => conformal_matrix(roots::horner(&roots::derivative(c), cx(x))),
            CatalogMap::PlanarPower(k) => {
                let z = cx(x);
                let dz = if *k == 1 { Complex64::new(1.0, 0.0) } else { z.powu(k - 1) * *k as f64 };
                conformal_matrix(dz)
            }
            CatalogMap::WindingMap3D(k) => {
                // R(kθ)·diag(1, k)·R(−θ) on the (x₁, x₂)-plane; on the axis
                // the map is not differentiable and θ = 0 is used.
                let theta = if x[0] == 0.0 && x[1] == 0.0 { 0.0 } else { x[1].atan2(x[0]) };
                let kf = *k as f64;
                let scale = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, kf]);
                let planar = rotation(kf * theta) * scale * rotation(-theta);
                let mut m = DMatrix::zeros(3, 3);
                m.view_mut((0, 0), (2, 2)).copy_from(&planar);
                m[(2, 2)] = 1.0;
                m
            }
            CatalogMap::Precomposed { a, b, base } => base.differential(&affine(a, b, x)) * a,
        }
    }

    fn fiber(&self, y: &[f64]) -> Result<Vec<FiberPoint>> {
        match self {
            CatalogMap::ComplexPolynomial(c) => {
                let w = cx(y);
                let mut shifted = roots::trim(c).to_vec();
                shifted[0] -= w;
                let radius = 1e-7 * (1.0 + w.norm());
                Ok(roots::roots(&shifted, radius)?
                    .into_iter()
                    .map(|(z, m)| FiberPoint { x: vec![z.re, z.im], index: m })
                    .collect())
            }
            CatalogMap::PlanarPower(1) => Ok(vec![FiberPoint { x: y.to_vec(), index: 1 }]),
            CatalogMap::PlanarPower(k) => {
                let w = cx(y);
                if w.norm() == 0.0 {
                    return Ok(vec![FiberPoint { x: vec![0.0, 0.0], index: *k as usize }]);
                }
                let kf = *k as f64;
                let r = w.norm().powf(1.0 / kf);
                let t = w.arg();
                Ok((0..*k)
                    .map(|j| {
                        let z = Complex64::from_polar(r, (t + 2.0 * PI * j as f64) / kf);
                        FiberPoint { x: vec![z.re, z.im], index: 1 }
                    })
                    .collect())
            }
            CatalogMap::WindingMap3D(k) => {
                let w = cx(y);
                if w.norm() == 0.0 {
                    return Ok(vec![FiberPoint { x: vec![0.0, 0.0, y[2]], index: *k as usize }]);
                }
                let kf = *k as f64;
                let t = w.arg();
                Ok((0..*k)
                    .map(|j| {
                        let z = Complex64::from_polar(w.norm(), (t + 2.0 * PI * j as f64) / kf);
                        FiberPoint { x: vec![z.re, z.im, y[2]], index: 1 }
                    })
                    .collect())
            }
            CatalogMap::Precomposed { a, b, base } => {
                let inv = a.clone().try_inverse().ok_or_else(|| Error::Numerical("singular affine matrix".into()))?;
                Ok(base
                    .fiber(y)?
                    .into_iter()
                    .map(|p| {
                        let shifted: Vec<f64> = p.x.iter().zip(b).map(|(u, bi)| u - bi).collect();
                        let x = (&inv * nalgebra::DVector::from_vec(shifted)).as_slice().to_vec();
                        FiberPoint { x, index: p.index }
                    })
                    .collect())
            }
        }
    }

    fn distortion(&self) -> (f64, f64, bool) {
        match self {
            CatalogMap::ComplexPolynomial(_) | CatalogMap::PlanarPower(_) => (1.0, 1.0, true),
            CatalogMap::WindingMap3D(k) => {
                let k = *k as f64;
                (k, k * k, true)
            }
            CatalogMap::Precomposed { a, base, .. } => {
                let n = a.nrows() as i32;
                let sv = a.singular_values();
                let (s_max, s_min) = (sv.max(), sv.min());
                let det = a.determinant();
                let ka_o = s_max.powi(n) / det;
                let ka_i = det / s_min.powi(n);
                let (bi, bo, exact) = base.distortion();
                if bi == 1.0 && bo == 1.0 && n == 2 {
                    // conformal base: distortion is that of A alone
                    (ka_i, ka_o, exact)
                } else {
                    (bi * ka_i, bo * ka_o, false)
                }
            }
        }
    }

    fn branch_values(&self) -> Result<BranchValues> {
        match self {
            CatalogMap::ComplexPolynomial(c) => {
                let dc = roots::derivative(roots::trim(c));
                if roots::trim(&dc).len() < 2 {
                    return Ok(BranchValues::Points(Vec::new()));
                }
                let crit = roots::roots(&dc, 1e-9)?;
                Ok(BranchValues::Points(
                    crit.iter()
                        .map(|(z, _)| {
                            let w = roots::horner(c, *z);
                            vec![w.re, w.im]
                        })
                        .collect(),
                ))
            }
            CatalogMap::PlanarPower(k) => {
                Ok(BranchValues::Points(if *k > 1 { vec![vec![0.0, 0.0]] } else { Vec::new() }))
            }
            CatalogMap::WindingMap3D(k) => {
                Ok(if *k > 1 { BranchValues::Axis } else { BranchValues::Points(Vec::new()) })
            }
            CatalogMap::Precomposed { base, .. } => base.branch_values(),
        }
    }
}

fn affine(a: &DMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum::<f64>() + b[i])
        .collect()
}

impl BranchedCover {
    pub fn new(map: CatalogMap) -> Result<Self> {
        map.validate()?;
        Ok(BranchedCover { map, image_radius: None })
    }

    /// Restricts the domain to `f⁻¹(B(0, R))`.
    pub fn with_image_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument("image radius must be positive".into()));
        }
        self.image_radius = Some(radius);
        Ok(self)
    }

    pub fn power(k: u32) -> Self {
        Self::new(CatalogMap::PlanarPower(k)).expect("k ≥ 1")
    }

    pub fn identity() -> Self {
        Self::power(1)
    }

    pub fn map(&self) -> &CatalogMap {
        &self.map
    }

    pub fn image_radius(&self) -> Option<f64> {
        self.image_radius
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    pub fn degree(&self) -> usize {
        self.map.degree()
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
        }
        Ok(())
    }

    /// True if `y` lies in `f(Ω)`.
    pub fn in_image(&self, y: &[f64]) -> bool {
        match self.image_radius {
            Some(r) => norm(y) < r,
            None => true,
        }
    }

    /// True if `x` lies in `Ω`.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.in_image(&self.map.eval(x))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.map.eval(x))
    }

    /// `Df(x)` as an `n × n` matrix.
    pub fn differential(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(self.map.differential(x))
    }

    /// `𝐉f(x) = det Df(x)`.
    pub fn jacobian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.differential(x)?.determinant())
    }

    /// The fiber `f⁻¹(y)` with local indices.
    pub fn fiber(&self, y: &[f64]) -> Result<Vec<FiberPoint>> {
        self.check_dim(y)?;
        if !self.in_image(y) {
            return Err(Error::OutsideImage(y.to_vec()));
        }
        let fiber = self.map.fiber(y)?;
        let total: usize = fiber.iter().map(|p| p.index).sum();
        if total != self.degree() {
            return Err(Error::RootSolver(format!(
                "fiber over {y:?} has total index {total}, expected {}",
                self.degree()
            )));
        }
        Ok(fiber)
    }

    /// `minv f(y) = Σ_{x ∈ f⁻¹(y)} ι(f, x)⟦x⟧`.
    pub fn minv(&self, y: &[f64]) -> Result<AlmgrenPoint> {
        let fiber = self.fiber(y)?;
        AlmgrenPoint::new(self.n(), fiber.into_iter().map(|p| (p.x, p.index)).collect())
    }

    /// Local index `ι(f, x)`: the multiplicity of `x` in the fiber over `f(x)`.
    pub fn local_index(&self, x: &[f64]) -> Result<usize> {
        let y = self.eval(x)?;
        let fiber = self.fiber(&y)?;
        let scale = 1.0 + norm(x);
        Ok(fiber
            .iter()
            .map(|p| (crate::numeric::dist(&p.x, x), p.index))
            .filter(|(dist, _)| *dist <= 1e-6 * scale)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, m)| m)
            .unwrap_or(1))
    }

    /// Inner and outer distortion `(K_I, K_O)`. Exact for the catalog
    /// except for precompositions of non-conformal bases, where the
    /// product bound is returned.
    pub fn distortion(&self) -> (f64, f64) {
        let (ki, ko, _) = self.map.distortion();
        (ki, ko)
    }

    pub fn distortion_is_exact(&self) -> bool {
        self.map.distortion().2
    }

    pub fn k_inner(&self) -> f64 {
        self.distortion().0
    }

    pub fn k_outer(&self) -> f64 {
        self.distortion().1
    }

    pub fn branch_values(&self) -> Result<BranchValues> {
        self.map.branch_values()
    }

    /// Distance from `y` to the branch values.
    pub fn distance_to_branch_values(&self, y: &[f64]) -> Result<f64> {
        Ok(self.branch_values()?.distance(y))
    }

    /// `f_*g(y) = Σ ι(f, x) g(x)`.
    pub fn push_forward(&self, g: impl Fn(&[f64]) -> f64, y: &[f64]) -> Result<f64> {
        Ok(self.fiber(y)?.iter().map(|p| p.index as f64 * g(&p.x)).sum())
    }

    /// `H(y) = (f_*(‖Df‖⁻²)(y))^{1/2}`.
    pub fn h_function(&self, y: &[f64]) -> Result<f64> {
        let fiber = self.fiber(y)?;
        let mut total = 0.0;
        for p in &fiber {
            let nrm = op_norm(&self.map.differential(&p.x));
            if p.index > 1 || !(nrm > 0.0) {
                return Err(Error::SingularH(y.to_vec()));
            }
            total += p.index as f64 / (nrm * nrm);
        }
        Ok(total.sqrt())
    }

    /// Fiber points in expanded order with the differentials of the local
    /// inverse branches, `L_j = Df(x_j)⁻¹`. Fails at branch values.
    pub fn branches(&self, y: &[f64]) -> Result<Vec<(Vec<f64>, DMatrix<f64>)>> {
        let point = self.minv(y)?;
        let mut out = Vec::with_capacity(self.degree());
        for e in point.entries() {
            if e.w > 1 {
                return Err(Error::SingularH(y.to_vec()));
            }
            let df = self.map.differential(&e.x);
            if min_stretch(&df) <= 1e-300 {
                return Err(Error::SingularH(y.to_vec()));
            }
            let inv = df.try_inverse().ok_or_else(|| Error::SingularH(y.to_vec()))?;
            out.push((e.x.clone(), inv));
        }
        Ok(out)
    }

    /// Metric Jacobian of `minv f` at a regular value `y`:
    /// `√det(Σ_j L_jᵀ L_j)` with `L_j = Df(x_j)⁻¹`.
    pub fn minv_jacobian(&self, y: &[f64]) -> Result<f64> {
        let n = self.n();
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (_, l) in self.branches(y)? {
            g += l.transpose() * &l;
        }
        Ok(g.determinant().max(0.0).sqrt())
    }

    /// The generalized inverse `g(y) = Σ ι(f, x) x = d·b(minv f(y))`.
    pub fn generalized_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.n()];
        for p in self.fiber(y)? {
            for (gi, xi) in g.iter_mut().zip(&p.x) {
                *gi += p.index as f64 * xi;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> BranchedCover {
        BranchedCover::new(CatalogMap::ComplexPolynomial(c.iter().map(|&r| Complex64::new(r, 0.0)).collect()))
            .unwrap()
    }

    #[test]
    fn minv_examples() {
        let sq = BranchedCover::power(2);
        assert_eq!(sq.minv(&[1.0, 0.0]).unwrap().expand(), vec![vec![-1.0, 1.2246467991473532e-16], vec![1.0, 0.0]]);
        let at_zero = sq.minv(&[0.0, 0.0]).unwrap();
        assert_eq!(at_zero.entries().len(), 1);
        assert_eq!(at_zero.entries()[0].w, 2);
        let p = poly(&[-1.0, 0.0, 1.0]).minv(&[0.0, 0.0]).unwrap().expand();
        assert!((p[0][0] + 1.0).abs() < 1e-14 && (p[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn local_indices() {
        assert_eq!(BranchedCover::power(3).local_index(&[0.0, 0.0]).unwrap(), 3);
        assert_eq!(BranchedCover::power(3).local_index(&[0.3, -0.1]).unwrap(), 1);
        let w = BranchedCover::new(CatalogMap::WindingMap3D(4)).unwrap();
        assert_eq!(w.local_index(&[0.0, 0.0, 2.0]).unwrap(), 4);
        assert_eq!(w.local_index(&[0.1, 0.0, 2.0]).unwrap(), 1);
        assert_eq!(poly(&[0.0, 0.0, -2.0, 1.0]).local_index(&[0.0, 0.0]).unwrap(), 2);
    }

    #[test]
    fn push_forward_and_h() {
        let sq = BranchedCover::power(2);
        let y = [0.6, -0.8];
        assert_eq!(sq.push_forward(|_| 1.0, &y).unwrap(), 2.0);
        let v = sq.push_forward(|x| x[0] * x[0] + x[1] * x[1], &y).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!((sq.h_function(&y).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sq.h_function(&[0.0, 0.0]), Err(Error::SingularH(_))));
        assert_eq!(BranchedCover::identity().h_function(&[3.0, 4.0]).unwrap(), 1.0);
        for d in 2..5u32 {
            let f = BranchedCover::power(d);
            let r: f64 = 0.37;
            let h2 = f.h_function(&[0.0, r]).unwrap().powi(2);
            let expected = r.powf(-2.0 * (d as f64 - 1.0) / d as f64) / d as f64;
            assert!((h2 - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn fibers_map_back() {
        let maps = vec![
            poly(&[0.5, -1.0, 0.0, 2.0]),
            BranchedCover::new(CatalogMap::WindingMap3D(3)).unwrap(),
            BranchedCover::new(CatalogMap::Precomposed {
                a: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.0]),
                b: vec![0.1, -0.2],
                base: Box::new(CatalogMap::PlanarPower(3)),
            })
            .unwrap(),
        ];
        for f in maps {
            let y: Vec<f64> = (0..f.n()).map(|i| 0.3 + 0.2 * i as f64).collect();
            let fiber = f.fiber(&y).unwrap();
            assert_eq!(fiber.iter().map(|p| p.index).sum::<usize>(), f.degree());
            for p in fiber {
                let back = f.eval(&p.x).unwrap();
                assert!(crate::numeric::dist(&back, &y) < 1e-9, "{back:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn distortion_inequalities_hold() {
        let maps = vec![
            poly(&[0.5, -1.0, 0.0, 2.0]),
            BranchedCover::new(CatalogMap::WindingMap3D(3)).unwrap(),
            BranchedCover::new(CatalogMap::Precomposed {
                a: DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 1.0]),
                b: vec![0.0, 0.0],
                base: Box::new(CatalogMap::PlanarPower(2)),
            })
            .unwrap(),
        ];
        for f in maps {
            let n = f.n() as i32;
            let (ki, ko) = f.distortion();
            for i in 0..50 {
                let x: Vec<f64> = (0..f.n()).map(|j| ((i * 7 + j * 3) as f64 * 0.61).sin() + 0.05).collect();
                let df = f.differential(&x).unwrap();
                let j = df.determinant();
                assert!(j > 0.0);
                let big = op_norm(&df).powi(n);
                let small = min_stretch(&df).powi(n);
                assert!(big <= ko * j * (1.0 + 1e-10));
                assert!(j <= ki * small * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn image_restriction_and_validation() {
        let f = BranchedCover::power(2).with_image_radius(1.0).unwrap();
        assert!(matches!(f.minv(&[2.0, 0.0]), Err(Error::OutsideImage(_))));
        assert!(f.minv(&[0.5, 0.0]).is_ok());
        assert!(BranchedCover::new(CatalogMap::PlanarPower(0)).is_err());
        assert!(BranchedCover::new(CatalogMap::Precomposed {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            b: vec![0.0, 0.0],
            base: Box::new(CatalogMap::PlanarPower(2)),
        })
        .is_err());
        assert!(BranchedCover::new(CatalogMap::ComplexPolynomial(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])).is_err());
    }

    #[test]
    fn generalized_inverse_of_powers_vanishes() {
        for d in 2..6u32 {
            let g = BranchedCover::power(d).generalized_inverse(&[0.7, -1.9]).unwrap();
            assert!(norm(&g) < 1e-14);
        }
        assert_eq!(BranchedCover::identity().generalized_inverse(&[0.7, -1.9]).unwrap(), vec![0.7, -1.9]);
    }
}
