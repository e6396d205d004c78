//! JSON descriptions of catalog maps.
//!
//! ```json
//! {"map": "poly", "coeffs": [-1, 0, 1]}            // c₀ + c₁z + …, entries are numbers or [re, im]
//! {"map": "power", "k": 3}
//! {"map": "wind3", "k": 2}
//! {"map": "precompose", "affine": [[2, 0], [0, 1]], "shift": [0, 0], "base": {"map": "power", "k": 2}}
//! ```
//!
//! Any description may carry `"image_radius": R` to restrict the domain to
//! `f⁻¹(B(0, R))`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::catalog::{BranchedCover, CatalogMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl From<CoeffSpec> for Complex64 {
    fn from(c: CoeffSpec) -> Self {
        match c {
            CoeffSpec::Real(r) => Complex64::new(r, 0.0),
            CoeffSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", deny_unknown_fields)]
pub enum MapSpec {
    #[serde(rename = "poly")]
    Poly {
        coeffs: Vec<CoeffSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_radius: Option<f64>,
    },
    #[serde(rename = "power")]
    Power {
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_radius: Option<f64>,
    },
    #[serde(rename = "wind3")]
    Wind3 {
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_radius: Option<f64>,
    },
    #[serde(rename = "precompose")]
    Precompose {
        affine: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
        base: Box<MapSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_radius: Option<f64>,
    },
}

impl MapSpec {
    fn catalog(&self) -> Result<CatalogMap> {
        Ok(match self {
            MapSpec::Poly { coeffs, .. } => CatalogMap::ComplexPolynomial(coeffs.iter().map(|&c| c.into()).collect()),
            MapSpec::Power { k, .. } => CatalogMap::PlanarPower(*k),
            MapSpec::Wind3 { k, .. } => CatalogMap::WindingMap3D(*k),
            MapSpec::Precompose { affine, shift, base, .. } => {
                let n = affine.len();
                if n == 0 || affine.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidArgument("field `affine` must be a square matrix".into()));
                }
                let a = DMatrix::from_fn(n, n, |i, j| affine[i][j]);
                let b = shift.clone().unwrap_or_else(|| vec![0.0; n]);
                CatalogMap::Precomposed { a, b, base: Box::new(base.catalog()?) }
            }
        })
    }

    fn image_radius(&self) -> Option<f64> {
        match self {
            MapSpec::Poly { image_radius, .. }
            | MapSpec::Power { image_radius, .. }
            | MapSpec::Wind3 { image_radius, .. }
            | MapSpec::Precompose { image_radius, .. } => *image_radius,
        }
    }

    pub fn build(&self) -> Result<BranchedCover> {
        let cover = BranchedCover::new(self.catalog()?)?;
        match self.image_radius() {
            Some(r) => cover.with_image_radius(r),
            None => Ok(cover),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<BranchedCover> {
        serde_json::from_str::<MapSpec>(s).map_err(|e| Error::InvalidArgument(e.to_string()))?.build()
    }

    #[test]
    fn descriptions_build_catalog_maps() {
        let f = parse(r#"{"map":"poly","coeffs":[-1,0,[1,0]]}"#).unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.eval(&[2.0, 0.0]).unwrap(), vec![3.0, 0.0]);
        assert_eq!(parse(r#"{"map":"power","k":3}"#).unwrap().degree(), 3);
        let w = parse(r#"{"map":"wind3","k":2,"image_radius":4}"#).unwrap();
        assert_eq!((w.n(), w.image_radius()), (3, Some(4.0)));
        let p = parse(r#"{"map":"precompose","affine":[[2,0],[0,1]],"base":{"map":"power","k":2}}"#).unwrap();
        assert_eq!(p.eval(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn malformed_descriptions_are_rejected() {
        assert!(parse(r#"{"map":"power","k":0}"#).is_err());
        assert!(parse(r#"{"map":"power","k":2,"extra":1}"#).is_err());
        assert!(parse(r#"{"map":"poly","coeffs":[3]}"#).is_err());
        assert!(parse(r#"{"map":"precompose","affine":[[1,0]],"base":{"map":"power","k":2}}"#).is_err());
        assert!(parse(r#"{"map":"precompose","affine":[[-1,0],[0,1]],"base":{"map":"power","k":2}}"#).is_err());
        assert!(parse(r#"{"map":"cubic"}"#).is_err());
    }
}
