use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dist;
use crate::region::Region;

/// A rectifiable curve `γ: [0, 1] → R^n` with an explicit derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Curve {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// Planar arc `c + r(cos θ, sin θ)`, `θ` from `theta0` to `theta1`.
    Arc { center: [f64; 2], radius: f64, theta0: f64, theta1: f64 },
    /// Polygonal curve, parametrized proportionally to arclength.
    Polyline { points: Vec<Vec<f64>> },
}

impl Curve {
    pub fn dim(&self) -> usize {
        match self {
            Curve::Segment { from, .. } => from.len(),
            Curve::Arc { .. } => 2,
            Curve::Polyline { points } => points[0].len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Curve::Segment { from, to } => from.len() == to.len() && !from.is_empty() && dist(from, to) > 0.0,
            Curve::Arc { radius, theta0, theta1, .. } => *radius > 0.0 && theta0 != theta1,
            Curve::Polyline { points } => {
                points.len() >= 2
                    && points.iter().all(|p| p.len() == points[0].len() && !p.is_empty())
                    && points.windows(2).all(|w| dist(&w[0], &w[1]) > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("curve of zero length or inconsistent dimension: {self:?}")))
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Curve::Segment { from, to } => dist(from, to),
            Curve::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
            Curve::Polyline { points } => points.windows(2).map(|w| dist(&w[0], &w[1])).sum(),
        }
    }

    fn polyline_locate(points: &[Vec<f64>], t: f64) -> (usize, f64, f64) {
        let lengths: Vec<f64> = points.windows(2).map(|w| dist(&w[0], &w[1])).collect();
        let total: f64 = lengths.iter().sum();
        let mut s = t.clamp(0.0, 1.0) * total;
        for (i, l) in lengths.iter().enumerate() {
            if s <= *l || i + 1 == lengths.len() {
                return (i, (s / l).min(1.0), total);
            }
            s -= l;
        }
        unreachable!("polyline has at least one segment")
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        match self {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect(),
            Curve::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + t * (theta1 - theta0);
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            Curve::Polyline { points } => {
                let (i, s, _) = Self::polyline_locate(points, t);
                points[i].iter().zip(&points[i + 1]).map(|(a, b)| a + s * (b - a)).collect()
            }
        }
    }

    /// `γ'(t)`.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match self {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            Curve::Arc { radius, theta0, theta1, .. } => {
                let th = theta0 + t * (theta1 - theta0);
                let w = theta1 - theta0;
                vec![-radius * w * th.sin(), radius * w * th.cos()]
            }
            Curve::Polyline { points } => {
                let (i, _, total) = Self::polyline_locate(points, t);
                let l = dist(&points[i], &points[i + 1]);
                points[i].iter().zip(&points[i + 1]).map(|(a, b)| (b - a) * total / l).collect()
            }
        }
    }

    /// Parameters `0 = t_0 < … < t_k = 1` with `|γ(t_{i+1}) − γ(t_i)| ≤ spacing`.
    pub fn sample_times(&self, spacing: f64) -> Vec<f64> {
        let k = ((self.length() / spacing).ceil() as usize).max(1);
        (0..=k).map(|i| i as f64 / k as f64).collect()
    }
}

/// Generators for the curve families shipped with the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `count` radial segments joining the boundary circles of an annulus.
    Radial { center: [f64; 2], inner: f64, outer: f64, count: usize },
    /// `count` concentric circles separating the boundary circles.
    Circles { center: [f64; 2], inner: f64, outer: f64, count: usize },
    Curves { curves: Vec<Curve>, region: Region },
}

/// A finite family `Γ` of curves in `region`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
    pub region: Region,
}

impl CurveFamily {
    pub fn new(curves: Vec<Curve>, region: Region) -> Result<Self> {
        region.validate()?;
        if curves.is_empty() {
            return Err(Error::InvalidArgument("empty curve family".into()));
        }
        for c in &curves {
            c.validate()?;
            if c.dim() != region.dim() {
                return Err(Error::DimensionMismatch { expected: region.dim(), got: c.dim() });
            }
        }
        Ok(CurveFamily { curves, region })
    }

    /// Radial segments `{c + r e^{iθ_k}: a ≤ r ≤ b}` at `count` equally spaced
    /// angles.
    pub fn radial(center: [f64; 2], inner: f64, outer: f64, count: usize) -> Result<Self> {
        let curves = (0..count)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                let (c, s) = (th.cos(), th.sin());
                Curve::Segment {
                    from: vec![center[0] + inner * c, center[1] + inner * s],
                    to: vec![center[0] + outer * c, center[1] + outer * s],
                }
            })
            .collect();
        Self::new(curves, Region::Annulus { center, inner, outer })
    }

    /// Full circles of radii strictly between `inner` and `outer`.
    pub fn circles(center: [f64; 2], inner: f64, outer: f64, count: usize) -> Result<Self> {
        let curves = (0..count)
            .map(|k| {
                let r = inner + (outer - inner) * (k as f64 + 0.5) / count as f64;
                Curve::Arc { center, radius: r, theta0: 0.0, theta1: 2.0 * PI }
            })
            .collect();
        Self::new(curves, Region::Annulus { center, inner, outer })
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        match spec {
            FamilySpec::Radial { center, inner, outer, count } => Self::radial(*center, *inner, *outer, *count),
            FamilySpec::Circles { center, inner, outer, count } => Self::circles(*center, *inner, *outer, *count),
            FamilySpec::Curves { curves, region } => Self::new(curves.clone(), region.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocities_match_differences() {
        let curves = [
            Curve::Segment { from: vec![0.0, 1.0], to: vec![2.0, -1.0] },
            Curve::Arc { center: [0.5, 0.0], radius: 2.0, theta0: 0.3, theta1: 2.0 },
            Curve::Polyline { points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 3.0]] },
        ];
        for c in &curves {
            c.validate().unwrap();
            for t in [0.1, 0.5, 0.9] {
                let v = c.velocity(t);
                let fd: Vec<f64> =
                    c.point(t + 1e-6).iter().zip(c.point(t - 1e-6)).map(|(a, b)| (a - b) / 2e-6).collect();
                assert!(dist(&v, &fd) < 1e-6, "{c:?}");
            }
        }
        assert!((curves[2].length() - 4.0).abs() < 1e-15);
        assert_eq!(curves[2].point(0.5), vec![1.0, 1.0]);
    }

    #[test]
    fn families_lie_in_their_region() {
        let f = CurveFamily::radial([0.0, 0.0], 1.0, 2.0, 16).unwrap();
        let g = CurveFamily::circles([0.0, 0.0], 1.0, 2.0, 4).unwrap();
        for fam in [&f, &g] {
            for c in &fam.curves {
                for t in [0.01, 0.5, 0.99] {
                    assert!(fam.region.contains(&c.point(t)));
                }
            }
        }
        assert!(Curve::Segment { from: vec![1.0], to: vec![1.0] }.validate().is_err());
        let spec: FamilySpec = serde_json::from_str(r#"{"family":"radial","center":[0,0],"inner":1,"outer":2,"count":8}"#).unwrap();
        assert_eq!(CurveFamily::from_spec(&spec).unwrap().len(), 8);
    }
}
