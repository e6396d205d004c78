//! JSON descriptions of polynomial-coefficient forms.
//!
//! ```json
//! {"kind": "trace_vol", "n": 2, "d": 2}
//! {"kind": "trace_1form", "n": 2, "d": 2, "coeffs": [0, [{"c": 1, "pow": [1, 0]}]]}
//! {"kind": "elementary", "n": 2, "d": 2, "indices": [0, 3], "coeff": 2.5}
//! {"kind": "sum", "terms": [ ... ]}
//! {"kind": "scale", "factor": -3, "form": { ... }}
//! {"kind": "symmetrize", "form": { ... }}            // S_d, or "split": [d0, d1]
//! {"kind": "tensor", "left": { ... }, "right": { ... }}
//! {"kind": "wedge", "left": { ... }, "right": { ... }}
//! ```
//!
//! Coefficients are a number or a list of monomials `{"c", "pow"}` whose
//! exponent vector has one entry per coordinate of the ambient space.
//! `elementary` indices are 0-based coordinates of `(R^n)^d`.

use serde::{Deserialize, Serialize};

use super::form::KForm;
use super::group::{GroupAction, Invariance};
use super::poly::{PolyForm, Polynomial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub c: f64,
    pub pow: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Constant(f64),
    Terms(Vec<MonomialSpec>),
}

impl Default for PolySpec {
    fn default() -> Self {
        PolySpec::Constant(1.0)
    }
}

impl PolySpec {
    pub fn build(&self, nvars: usize) -> Result<Polynomial> {
        match self {
            PolySpec::Constant(c) => Ok(Polynomial::constant(nvars, *c)),
            PolySpec::Terms(terms) => {
                let mut p = Polynomial::zero(nvars);
                for t in terms {
                    if t.pow.len() != nvars {
                        return Err(Error::InvalidArgument(format!(
                            "monomial exponent {:?} needs {nvars} entries",
                            t.pow
                        )));
                    }
                    p = p.add(&Polynomial::monomial(nvars, t.pow.clone(), t.c));
                }
                Ok(p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FormSpec {
    #[serde(rename = "trace_vol")]
    TraceVol { n: usize, d: usize },
    #[serde(rename = "trace_1form")]
    TraceOneForm { n: usize, d: usize, coeffs: Vec<PolySpec> },
    #[serde(rename = "elementary")]
    Elementary {
        n: usize,
        d: usize,
        indices: Vec<usize>,
        #[serde(default)]
        coeff: PolySpec,
    },
    #[serde(rename = "sum")]
    Sum { terms: Vec<FormSpec> },
    #[serde(rename = "scale")]
    Scale { factor: f64, form: Box<FormSpec> },
    #[serde(rename = "symmetrize")]
    Symmetrize {
        form: Box<FormSpec>,
        #[serde(default)]
        split: Option<[usize; 2]>,
    },
    #[serde(rename = "tensor")]
    Tensor { left: Box<FormSpec>, right: Box<FormSpec> },
    #[serde(rename = "wedge")]
    Wedge { left: Box<FormSpec>, right: Box<FormSpec> },
}

/// A built description: the polynomial form together with its block
/// structure and invariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltForm {
    pub n: usize,
    pub d: usize,
    pub form: PolyForm,
    pub invariance: Invariance,
}

impl BuiltForm {
    pub fn to_kform(&self) -> Result<KForm> {
        KForm::from_poly(self.n, self.d, self.form.clone(), self.invariance)
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("field `{name}` must be at least 1")));
    }
    Ok(())
}

impl FormSpec {
    pub fn build(&self) -> Result<BuiltForm> {
        match self {
            FormSpec::TraceVol { n, d } => {
                positive("n", *n)?;
                positive("d", *d)?;
                let idx: Vec<usize> = (0..*n).collect();
                let vol = PolyForm::term(*n, &idx, Polynomial::constant(*n, 1.0))?;
                Ok(BuiltForm { n: *n, d: *d, form: vol.trace(*d), invariance: Invariance::Full })
            }
            FormSpec::TraceOneForm { n, d, coeffs } => {
                positive("n", *n)?;
                positive("d", *d)?;
                if coeffs.len() != *n {
                    return Err(Error::InvalidArgument(format!(
                        "field `coeffs` needs {n} entries, got {}",
                        coeffs.len()
                    )));
                }
                let mut alpha = PolyForm::zero(*n, 1);
                for (i, c) in coeffs.iter().enumerate() {
                    alpha = alpha.add(&PolyForm::term(*n, &[i], c.build(*n)?)?)?;
                }
                Ok(BuiltForm { n: *n, d: *d, form: alpha.trace(*d), invariance: Invariance::Full })
            }
            FormSpec::Elementary { n, d, indices, coeff } => {
                positive("n", *n)?;
                positive("d", *d)?;
                let dim = n * d;
                let form = PolyForm::term(dim, indices, coeff.build(dim)?)?;
                Ok(BuiltForm { n: *n, d: *d, form, invariance: Invariance::None })
            }
            FormSpec::Sum { terms } => {
                let mut iter = terms.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| Error::InvalidArgument("field `terms` must not be empty".into()))?
                    .build()?;
                iter.try_fold(first, |acc, t| {
                    let b = t.build()?;
                    if (b.n, b.d) != (acc.n, acc.d) {
                        return Err(Error::FormMismatch(format!(
                            "sum of forms on (R^{})^{} and (R^{})^{}",
                            acc.n, acc.d, b.n, b.d
                        )));
                    }
                    let invariance = if acc.invariance == b.invariance { acc.invariance } else { Invariance::None };
                    Ok(BuiltForm { form: acc.form.add(&b.form)?, invariance, ..acc })
                })
            }
            FormSpec::Scale { factor, form } => {
                let b = form.build()?;
                Ok(BuiltForm { form: b.form.scale(*factor), ..b })
            }
            FormSpec::Symmetrize { form, split } => {
                let b = form.build()?;
                let action = match split {
                    None => GroupAction::full(b.n, b.d)?,
                    Some([d0, d1]) if d0 + d1 == b.d => GroupAction::split(b.n, *d0, *d1)?,
                    Some([d0, d1]) => {
                        return Err(Error::InvalidArgument(format!(
                            "field `split` ({d0},{d1}) does not partition d = {}",
                            b.d
                        )))
                    }
                };
                Ok(BuiltForm { form: b.form.symmetrize(&action)?, invariance: action.tag(), ..b })
            }
            FormSpec::Tensor { left, right } => {
                let (l, r) = (left.build()?, right.build()?);
                if l.n != r.n {
                    return Err(Error::DimensionMismatch { expected: l.n, got: r.n });
                }
                let invariance = match (l.invariance, r.invariance) {
                    (Invariance::Full, Invariance::Full) => Invariance::Split(l.d, r.d),
                    _ => Invariance::None,
                };
                Ok(BuiltForm { n: l.n, d: l.d + r.d, form: l.form.tensor(&r.form)?, invariance })
            }
            FormSpec::Wedge { left, right } => {
                let (l, r) = (left.build()?, right.build()?);
                if (l.n, l.d) != (r.n, r.d) {
                    return Err(Error::FormMismatch("wedge factors live on different spaces".into()));
                }
                let invariance = if l.invariance == r.invariance { l.invariance } else { Invariance::None };
                Ok(BuiltForm { form: l.form.wedge(&r.form)?, invariance, ..l })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<BuiltForm> {
        serde_json::from_str::<FormSpec>(s).map_err(|e| Error::InvalidArgument(e.to_string()))?.build()
    }

    #[test]
    fn trace_vol_is_natural_form() {
        let b = parse(r#"{"kind":"trace_vol","n":2,"d":3}"#).unwrap();
        assert_eq!(b.invariance, Invariance::Full);
        let w = b.to_kform().unwrap();
        assert!(w.is_constant());
        let direct = crate::forms::natural_form(2, 3).eval(&[0.0; 6]);
        assert_eq!(w.eval(&[0.0; 6]), direct);
    }

    #[test]
    fn trace_one_form_with_linear_coefficient() {
        let b = parse(r#"{"kind":"trace_1form","n":2,"d":2,"coeffs":[0,[{"c":1,"pow":[1,0]}]]}"#).unwrap();
        let v = b.form.eval(&[3.0, 0.0, 5.0, 0.0]);
        assert_eq!(v.coefficient(&[1]), 3.0);
        assert_eq!(v.coefficient(&[3]), 5.0);
        assert_eq!(b.form.d().eval(&[0.0; 4]).coefficient(&[2, 3]), 1.0);
    }

    #[test]
    fn composite_descriptions() {
        let b = parse(
            r#"{"kind":"symmetrize","form":{"kind":"sum","terms":[
                {"kind":"elementary","n":1,"d":2,"indices":[0],"coeff":[{"c":2,"pow":[0,1]}]},
                {"kind":"scale","factor":-1,"form":{"kind":"elementary","n":1,"d":2,"indices":[1]}}]}}"#,
        )
        .unwrap();
        assert_eq!(b.invariance, Invariance::Full);
        let t = parse(r#"{"kind":"tensor","left":{"kind":"trace_vol","n":1,"d":2},"right":{"kind":"trace_vol","n":1,"d":1}}"#)
            .unwrap();
        assert_eq!(t.invariance, Invariance::Split(2, 1));
        assert_eq!(t.form.degree(), 2);
    }

    #[test]
    fn malformed_descriptions_are_rejected() {
        assert!(parse(r#"{"kind":"trace_vol","n":0,"d":2}"#).is_err());
        assert!(parse(r#"{"kind":"trace_1form","n":2,"d":2,"coeffs":[1]}"#).is_err());
        assert!(parse(r#"{"kind":"elementary","n":2,"d":1,"indices":[2]}"#).is_err());
        assert!(parse(r#"{"kind":"sum","terms":[]}"#).is_err());
        assert!(parse(r#"{"kind":"nope"}"#).is_err());
        assert!(parse(r#"{"kind":"trace_vol","n":2,"d":2,"extra":1}"#).is_err());
    }
}
