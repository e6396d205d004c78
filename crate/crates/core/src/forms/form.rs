use std::fmt;
use std::sync::Arc;

use super::covector::KCovector;
use super::group::{GroupAction, Invariance};
use super::poly::PolyForm;
use crate::error::{Error, Result};

/// Pointwise value of a form: point of `(R^n)^d` ↦ covector.
pub type CoeffFn = Arc<dyn Fn(&[f64]) -> KCovector + Send + Sync>;

/// Default step for finite-difference exterior derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A smooth `k`-form on `(R^n)^d`.
///
/// Coefficients are evaluated by a closure. When an analytic derivative is
/// attached it is used by [`KForm::exterior_derivative`]; otherwise the
/// derivative is taken by Richardson-extrapolated central differences.
#[derive(Clone)]
pub struct KForm {
    n: usize,
    d: usize,
    k: usize,
    coeff: CoeffFn,
    derivative: Option<CoeffFn>,
    constant: bool,
    invariance: Invariance,
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KForm")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("k", &self.k)
            .field("constant", &self.constant)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("invariance", &self.invariance)
            .finish()
    }
}

impl KForm {
    /// A form from a coefficient closure, with no known derivative.
    pub fn from_fn(
        n: usize,
        d: usize,
        k: usize,
        invariance: Invariance,
        coeff: impl Fn(&[f64]) -> KCovector + Send + Sync + 'static,
    ) -> Self {
        KForm { n, d, k, coeff: Arc::new(coeff), derivative: None, constant: false, invariance }
    }

    /// Attaches an analytic derivative `x ↦ (dω)_x`.
    pub fn with_derivative(mut self, deriv: impl Fn(&[f64]) -> KCovector + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(deriv));
        self
    }

    /// Drops the analytic derivative so that `d` falls back to differences.
    pub fn without_derivative(mut self) -> Self {
        self.derivative = None;
        self.constant = false;
        self
    }

    /// The constant form with value `value` everywhere.
    pub fn constant(n: usize, d: usize, value: KCovector, invariance: Invariance) -> Result<Self> {
        if value.dim() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: value.dim() });
        }
        let k = value.degree();
        let dim = n * d;
        Ok(KForm {
            n,
            d,
            k,
            coeff: Arc::new(move |_| value.clone()),
            derivative: Some(Arc::new(move |_| KCovector::zero(dim, k + 1))),
            constant: true,
            invariance,
        })
    }

    pub fn zero(n: usize, d: usize, k: usize) -> Self {
        Self::constant(n, d, KCovector::zero(n * d, k), Invariance::Full).expect("consistent dimensions")
    }

    /// A polynomial-coefficient form with its exact derivative attached.
    pub fn from_poly(n: usize, d: usize, form: PolyForm, invariance: Invariance) -> Result<Self> {
        if form.dim() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: form.dim() });
        }
        if form.is_constant() {
            return Self::constant(n, d, form.eval(&vec![0.0; n * d]), invariance);
        }
        let deriv = form.d();
        let k = form.degree();
        Ok(KForm {
            n,
            d,
            k,
            coeff: Arc::new(move |x| form.eval(x)),
            derivative: Some(Arc::new(move |x| deriv.eval(x))),
            constant: false,
            invariance,
        })
    }

    /// The volume form of `R^n` as a form with `d = 1`.
    pub fn volume(n: usize) -> Self {
        Self::constant(n, 1, KCovector::volume(n), Invariance::Full).expect("consistent dimensions")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Dimension `N = n·d` of the ambient space.
    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn invariance(&self) -> Invariance {
        self.invariance
    }

    /// Overrides the invariance tag (the caller vouches for it).
    pub fn with_invariance(mut self, invariance: Invariance) -> Self {
        self.invariance = invariance;
        self
    }

    /// `ω_x`.
    pub fn eval(&self, x: &[f64]) -> KCovector {
        (self.coeff)(x)
    }

    /// `ω_x(v_1, …, v_k)`.
    pub fn eval_on(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64 {
        self.eval(x).eval(vectors)
    }

    /// `c·ω`.
    pub fn scale(&self, c: f64) -> Self {
        let coeff = self.coeff.clone();
        let derivative = self.derivative.clone();
        KForm {
            coeff: Arc::new(move |x| coeff(x).scale(c)),
            derivative: derivative.map(|df| Arc::new(move |x: &[f64]| df(x).scale(c)) as CoeffFn),
            ..self.clone()
        }
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d || self.k != other.k {
            return Err(Error::FormMismatch(format!(
                "({}-form, n={}, d={}) vs ({}-form, n={}, d={})",
                self.k, self.n, self.d, other.k, other.n, other.d
            )));
        }
        Ok(())
    }

    /// `a·ω₁ + b·ω₂`.
    pub fn linear_combination(a: f64, w1: &Self, b: f64, w2: &Self) -> Result<Self> {
        w1.check_same_space(w2)?;
        let (c1, c2) = (w1.coeff.clone(), w2.coeff.clone());
        let derivative = match (&w1.derivative, &w2.derivative) {
            (Some(d1), Some(d2)) => {
                let (d1, d2) = (d1.clone(), d2.clone());
                Some(Arc::new(move |x: &[f64]| d1(x).axpby(a, &d2(x), b).expect("same space")) as CoeffFn)
            }
            _ => None,
        };
        let invariance = if w1.invariance == w2.invariance { w1.invariance } else { Invariance::None };
        Ok(KForm {
            n: w1.n,
            d: w1.d,
            k: w1.k,
            coeff: Arc::new(move |x| c1(x).axpby(a, &c2(x), b).expect("same space")),
            derivative,
            constant: w1.constant && w2.constant,
            invariance,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::linear_combination(1.0, self, 1.0, other)
    }

    /// Pointwise wedge product (determinant convention). The derivative
    /// follows the Leibniz rule when both factors carry one.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::FormMismatch(format!(
                "wedge of forms on (R^{})^{} and (R^{})^{}",
                self.n, self.d, other.n, other.d
            )));
        }
        let dim = self.dim();
        if self.k + other.k > dim {
            return Err(Error::DegreeOverflow { k1: self.k, k2: other.k, dim });
        }
        let (c1, c2) = (self.coeff.clone(), other.coeff.clone());
        let k1 = self.k;
        let derivative = match (&self.derivative, &other.derivative) {
            (Some(d1), Some(d2)) if self.k + other.k < dim => {
                let (d1, d2, c1, c2) = (d1.clone(), d2.clone(), c1.clone(), c2.clone());
                let sign = if k1 % 2 == 0 { 1.0 } else { -1.0 };
                Some(Arc::new(move |x: &[f64]| {
                    let a = d1(x).wedge(&c2(x)).expect("degrees checked");
                    let b = c1(x).wedge(&d2(x)).expect("degrees checked");
                    a.axpby(1.0, &b, sign).expect("same space")
                }) as CoeffFn)
            }
            (Some(_), Some(_)) => {
                let k = self.k + other.k;
                Some(Arc::new(move |_: &[f64]| KCovector::zero(dim, k + 1)) as CoeffFn)
            }
            _ => None,
        };
        let invariance = if self.invariance == other.invariance { self.invariance } else { Invariance::None };
        Ok(KForm {
            n: self.n,
            d: self.d,
            k: self.k + other.k,
            coeff: Arc::new(move |x| c1(x).wedge(&c2(x)).expect("degrees checked")),
            derivative,
            constant: self.constant && other.constant,
            invariance,
        })
    }

    /// Exterior derivative. Constant forms give the zero form exactly; an
    /// attached analytic derivative is used when present; otherwise central
    /// differences with step `fd_step`, refined once by Richardson
    /// extrapolation.
    pub fn exterior_derivative(&self, fd_step: f64) -> Self {
        let dim = self.dim();
        let k1 = self.k + 1;
        if self.constant || k1 > dim {
            return KForm {
                n: self.n,
                d: self.d,
                k: k1,
                coeff: Arc::new(move |_| KCovector::zero(dim, k1)),
                derivative: Some(Arc::new(move |_| KCovector::zero(dim, k1 + 1))),
                constant: true,
                invariance: self.invariance,
            };
        }
        let coeff: CoeffFn = match &self.derivative {
            Some(df) => df.clone(),
            None => {
                let c = self.coeff.clone();
                Arc::new(move |x: &[f64]| fd_derivative(&c, x, k1, fd_step))
            }
        };
        KForm {
            n: self.n,
            d: self.d,
            k: k1,
            coeff,
            derivative: Some(Arc::new(move |_| KCovector::zero(dim, k1 + 1))),
            constant: false,
            invariance: self.invariance,
        }
    }

    /// `γ^*ω` for one block permutation.
    pub fn pullback_by(&self, action: &GroupAction, sigma: &[usize]) -> Self {
        let act = action.clone();
        let s = sigma.to_vec();
        let c = self.coeff.clone();
        let coeff: CoeffFn = Arc::new(move |x| act.pullback_covector(&s, &c(&act.act(&s, x))));
        let derivative = self.derivative.clone().map(|df| {
            let act = action.clone();
            let s = sigma.to_vec();
            Arc::new(move |x: &[f64]| act.pullback_covector(&s, &df(&act.act(&s, x)))) as CoeffFn
        });
        KForm { coeff, derivative, invariance: Invariance::None, ..self.clone() }
    }

    /// Maximal deviation of `γ^*ω` from `ω` over the given points and all
    /// group elements, measured coefficientwise.
    pub fn invariance_defect(&self, action: &GroupAction, points: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in points {
            let base = self.eval(x);
            for sigma in action.elements() {
                let moved = action.pullback_covector(sigma, &self.eval(&action.act(sigma, x)));
                worst = worst.max(moved.max_abs_diff(&base));
            }
        }
        worst
    }
}

fn fd_derivative(c: &CoeffFn, x: &[f64], k1: usize, h: f64) -> KCovector {
    let dim = x.len();
    let mut out = KCovector::zero(dim, k1);
    let mut xp = x.to_vec();
    let central = |xp: &mut Vec<f64>, i: usize, step: f64| -> KCovector {
        let orig = xp[i];
        xp[i] = orig + step;
        let plus = c(xp);
        xp[i] = orig - step;
        let minus = c(xp);
        xp[i] = orig;
        plus.axpby(1.0 / (2.0 * step), &minus, -1.0 / (2.0 * step)).expect("same space")
    };
    for i in 0..dim {
        let coarse = central(&mut xp, i, h);
        let fine = central(&mut xp, i, 0.5 * h);
        let refined = fine.axpby(4.0 / 3.0, &coarse, -1.0 / 3.0).expect("same space");
        let di = KCovector::elementary(dim, &[i], 1.0).expect("index in range");
        out = out.add(&di.wedge(&refined).expect("degree fits")).expect("same space");
    }
    out
}

/// `P_Γ ω = |Γ|^{-1} Σ_γ γ^*ω`, tagged with the invariance of `Γ`.
pub fn symmetrize(form: &KForm, action: &GroupAction) -> Result<KForm> {
    if action.n() != form.n || action.d() != form.d {
        return Err(Error::FormMismatch(format!(
            "group acts on (R^{})^{}, form lives on (R^{})^{}",
            action.n(),
            action.d(),
            form.n,
            form.d
        )));
    }
    let order = action.order() as f64;
    let average = |c: CoeffFn, act: GroupAction| -> CoeffFn {
        Arc::new(move |x: &[f64]| {
            let mut acc: Option<KCovector> = None;
            for sigma in act.elements() {
                let term = act.pullback_covector(sigma, &c(&act.act(sigma, x)));
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term).expect("same space"),
                });
            }
            acc.expect("group is non-empty").scale(1.0 / order)
        })
    };
    Ok(KForm {
        coeff: average(form.coeff.clone(), action.clone()),
        derivative: form.derivative.clone().map(|df| average(df, action.clone())),
        invariance: action.tag(),
        ..form.clone()
    })
}

/// `tr(α) = Σ_j P_j^*α` for a form `α` on `R^n` (`d = 1`).
pub fn trace_form(alpha: &KForm, d: usize) -> Result<KForm> {
    if alpha.d != 1 {
        return Err(Error::FormMismatch(format!("trace needs a form on R^n, got d = {}", alpha.d)));
    }
    let n = alpha.n;
    let lift = |c: CoeffFn| -> CoeffFn {
        Arc::new(move |x: &[f64]| {
            let mut acc = KCovector::zero(n * d, c(&x[..n]).degree());
            for j in 0..d {
                let local = c(&x[j * n..(j + 1) * n]);
                acc = acc.add(&local.reindex(n * d, |i| j * n + i)).expect("same space");
            }
            acc
        })
    };
    Ok(KForm {
        n,
        d,
        k: alpha.k,
        coeff: lift(alpha.coeff.clone()),
        derivative: alpha.derivative.clone().map(lift),
        constant: alpha.constant,
        invariance: Invariance::Full,
    })
}

/// The natural `n`-form `ω_n = tr(vol_{R^n})` on `(R^n)^d`.
pub fn natural_form(n: usize, d: usize) -> KForm {
    trace_form(&KForm::volume(n), d).expect("volume form has d = 1")
}

/// `ω₀ ⊗ ω₁ = P_0^*ω₀ ∧ P_1^*ω₁` on `(R^n)^{d₀+d₁}`.
pub fn tensor_product(w0: &KForm, w1: &KForm) -> Result<KForm> {
    if w0.n != w1.n {
        return Err(Error::DimensionMismatch { expected: w0.n, got: w1.n });
    }
    let n = w0.n;
    let (d0, d1) = (w0.d, w1.d);
    let (n0, dim) = (n * d0, n * (d0 + d1));
    if w0.k + w1.k > dim {
        return Err(Error::DegreeOverflow { k1: w0.k, k2: w1.k, dim });
    }
    let embed = |w: &KForm, offset: usize, lo: usize, hi: usize| -> KForm {
        let c = w.coeff.clone();
        let coeff: CoeffFn = Arc::new(move |x: &[f64]| c(&x[lo..hi]).reindex(dim, |i| offset + i));
        let derivative = w.derivative.clone().map(|df| {
            Arc::new(move |x: &[f64]| df(&x[lo..hi]).reindex(dim, |i| offset + i)) as CoeffFn
        });
        KForm { n, d: d0 + d1, k: w.k, coeff, derivative, constant: w.constant, invariance: Invariance::None }
    };
    let left = embed(w0, 0, 0, n0);
    let right = embed(w1, n0, n0, dim);
    let mut out = left.wedge(&right)?;
    out.invariance = match (w0.invariance, w1.invariance) {
        (Invariance::Full, Invariance::Full) => Invariance::Split(d0, d1),
        _ => Invariance::None,
    };
    Ok(out)
}
