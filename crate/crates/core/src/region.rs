//! Simple sampling regions: boxes, balls and planar annuli.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dist, unit_ball_volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{ inner < |x − center| < outer }` in `R²`.
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

impl Region {
    pub fn unit_box(n: usize) -> Self {
        Region::Box { lo: vec![0.0; n], hi: vec![1.0; n] }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Region::Annulus { center: [0.0, 0.0], inner, outer }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Region::Box { lo, hi } => !lo.is_empty() && lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a < b),
            Region::Ball { center, radius } => !center.is_empty() && *radius > 0.0,
            Region::Annulus { inner, outer, .. } => *inner >= 0.0 && inner < outer,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate region {self:?}")))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
            Region::Annulus { .. } => 2,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Ball { center, radius } => dist(x, center) < *radius,
            Region::Annulus { center, inner, outer } => {
                let r = dist(x, center);
                *inner < r && r < *outer
            }
        }
    }

    /// Whether the closed box `[lo, hi]` lies in the region.
    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        if lo.len() != self.dim() || hi.len() != self.dim() {
            return false;
        }
        let farthest = |c: &[f64]| -> f64 {
            let v: Vec<f64> = c.iter().zip(lo.iter().zip(hi)).map(|(ci, (a, b))| (ci - a).abs().max((b - ci).abs())).collect();
            crate::numeric::norm(&v)
        };
        match self {
            Region::Box { lo: l, hi: h } => lo.iter().zip(l).all(|(a, b)| a >= b) && hi.iter().zip(h).all(|(a, b)| a <= b),
            Region::Ball { center, radius } => farthest(center) < *radius,
            Region::Annulus { center, inner, outer } => {
                let nearest: Vec<f64> = center.iter().zip(lo.iter().zip(hi)).map(|(c, (a, b))| c.clamp(*a, *b) - c).collect();
                farthest(center) < *outer && crate::numeric::norm(&nearest) > *inner
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            Region::Annulus { center, outer, .. } => {
                (vec![center[0] - outer, center[1] - outer], vec![center[0] + outer, center[1] + outer])
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Region::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Region::Annulus { inner, outer, .. } => std::f64::consts::PI * (outer * outer - inner * inner),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        match self {
            Region::Box { .. } => dist(&lo, &hi),
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Annulus { outer, .. } => 2.0 * outer,
        }
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let (lo, hi) = self.bounding_box();
        loop {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if self.contains(&x) {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng_stream;

    #[test]
    fn samples_stay_inside() {
        let mut rng = rng_stream(1, 0);
        for region in [
            Region::unit_box(3),
            Region::Ball { center: vec![1.0, -1.0], radius: 0.5 },
            Region::annulus(1.0, 2.0),
        ] {
            region.validate().unwrap();
            for _ in 0..200 {
                assert!(region.contains(&region.sample(&mut rng)));
            }
        }
        assert!(Region::annulus(2.0, 1.0).validate().is_err());
        let ring = Region::annulus(0.25, 2.0);
        assert!(ring.contains_box(&[0.5, -0.5], &[1.5, 0.5]));
        assert!(!ring.contains_box(&[-0.5, -0.5], &[0.5, 0.5]));
        assert!(!ring.contains_box(&[0.5, -0.5], &[1.9, 1.9]));
        let r: Region = serde_json::from_str(r#"{"shape":"annulus","center":[0,0],"inner":1,"outer":2}"#).unwrap();
        assert!((r.volume() - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
