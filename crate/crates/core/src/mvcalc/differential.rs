use nalgebra::DMatrix;
use super::map::MultiValuedMap;
use crate::assignment;
use crate::error::Result;
use crate::numeric::{dist, norm, op_norm};

/// The differential `T_{x₀}f = Σ_j ⟦f_j(x₀) + L_j(x − x₀)⟧`.
#[derive(Debug, Clone, PartialEq)]
pub struct MVDifferential {
    pub x: Vec<f64>,
    /// Branch values `f_j(x₀)` in expanded order.
    pub values: Vec<Vec<f64>>,
    /// `L_j` as `n × m` matrices, aligned with `values`.
    pub maps: Vec<DMatrix<f64>>,
    /// Some branch values coincide (the point lies on the singular set).
    pub on_singular_set: bool,
    /// Two distinct matchings of the difference stencil were within 1e-12
    /// in cost.
    pub ambiguous: bool,
    pub exact: bool,
}

impl MVDifferential {
    pub fn d(&self) -> usize {
        self.values.len()
    }

    /// Frame norm `|Df| = (Σ_j ‖L_j‖²)^{1/2}`.
    pub fn frame_norm(&self) -> f64 {
        self.maps.iter().map(|l| op_norm(l).powi(2)).sum::<f64>().sqrt()
    }

    /// Stacked `nd × m` matrix of the branch differentials.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (n, m) = self.maps[0].shape();
        let mut out = DMatrix::zeros(n * self.d(), m);
        for (j, l) in self.maps.iter().enumerate() {
            out.view_mut((j * n, 0), (n, m)).copy_from(l);
        }
        out
    }

    /// Concatenated branch values, a point of `(R^n)^d`.
    pub fn concatenated(&self) -> Vec<f64> {
        self.values.concat()
    }

    /// Same differential with branches listed in the order `perm`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        MVDifferential {
            values: perm.iter().map(|&j| self.values[j].clone()).collect(),
            maps: perm.iter().map(|&j| self.maps[j].clone()).collect(),
            ..self.clone()
        }
    }
}

/// Tolerance under which two branch values count as equal.
pub fn coincidence_tol(values: &[Vec<f64>]) -> f64 {
    let scale = values.iter().map(|v| norm(v)).fold(0.0, f64::max);
    1e-8 * (1.0 + scale)
}

fn squared_costs(from: &[Vec<f64>], to: &[Vec<f64>]) -> Vec<f64> {
    from.iter().flat_map(|a| to.iter().map(move |b| dist(a, b).powi(2))).collect()
}

/// Matches `from` to `to`; also reports whether a transposition of two
/// genuinely different assignments comes within `1e-12` of the optimum.
fn match_with_ambiguity(from: &[Vec<f64>], to: &[Vec<f64>], tol: f64) -> (Vec<usize>, bool) {
    let d = from.len();
    let cost = squared_costs(from, to);
    let scale = cost.iter().cloned().fold(0.0, f64::max);
    let sigma = assignment::solve_lex_smallest(&cost, d, 1e-12 * (1.0 + scale));
    let mut ambiguous = false;
    for i in 0..d {
        for j in i + 1..d {
            if dist(&from[i], &from[j]) <= tol || dist(&to[sigma[i]], &to[sigma[j]]) <= tol {
                continue;
            }
            let now = cost[i * d + sigma[i]] + cost[j * d + sigma[j]];
            let swapped = cost[i * d + sigma[j]] + cost[j * d + sigma[i]];
            if swapped - now < 1e-12 {
                ambiguous = true;
            }
        }
    }
    (sigma, ambiguous)
}

/// Averages the differentials of coinciding branches.
fn enforce_coincidence(values: &[Vec<f64>], maps: &mut [DMatrix<f64>], tol: f64) -> bool {
    let d = values.len();
    let mut group: Vec<usize> = (0..d).collect();
    let mut singular = false;
    for i in 0..d {
        for j in 0..i {
            if dist(&values[i], &values[j]) <= tol {
                group[i] = group[j];
                singular = true;
                break;
            }
        }
    }
    for g in 0..d {
        let members: Vec<usize> = (0..d).filter(|&j| group[j] == g).collect();
        if members.len() > 1 {
            let mut avg = maps[members[0]].clone() * 0.0;
            for &j in &members {
                avg += &maps[j];
            }
            avg /= members.len() as f64;
            for &j in &members {
                maps[j] = avg.clone();
            }
        }
    }
    singular
}

/// Differential of `f` at `x`. Exact branch differentials are returned when
/// the map provides them; otherwise central differences with step `h` along
/// branches matched by optimal assignment.
pub fn differential(f: &MultiValuedMap, x: &[f64], h: f64) -> Result<MVDifferential> {
    if let Some(exact) = f.exact_branches(x) {
        let pairs = exact?;
        let values: Vec<Vec<f64>> = pairs.iter().map(|p| p.0.clone()).collect();
        let mut maps: Vec<DMatrix<f64>> = pairs.into_iter().map(|p| p.1).collect();
        let tol = coincidence_tol(&values);
        let on_singular_set = enforce_coincidence(&values, &mut maps, tol);
        return Ok(MVDifferential { x: x.to_vec(), values, maps, on_singular_set, ambiguous: false, exact: true });
    }
    let (m, n) = (f.m(), f.n());
    let values = f.eval(x)?.expand();
    let d = values.len();
    let tol = coincidence_tol(&values);
    let mut maps = vec![DMatrix::<f64>::zeros(n, m); d];
    let mut ambiguous = false;
    let mut xp = x.to_vec();
    for c in 0..m {
        xp[c] = x[c] + h;
        let plus = f.eval(&xp)?.expand();
        xp[c] = x[c] - h;
        let minus = f.eval(&xp)?.expand();
        xp[c] = x[c];
        let (sp, ap) = match_with_ambiguity(&values, &plus, tol);
        let (sm, am) = match_with_ambiguity(&values, &minus, tol);
        ambiguous |= ap || am;
        for j in 0..d {
            for i in 0..n {
                maps[j][(i, c)] = (plus[sp[j]][i] - minus[sm[j]][i]) / (2.0 * h);
            }
        }
    }
    let on_singular_set = enforce_coincidence(&values, &mut maps, tol);
    Ok(MVDifferential { x: x.to_vec(), values, maps, on_singular_set, ambiguous, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::BranchedCover;
    use crate::region::Region;

    fn conformal(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, -b, b, a])
    }

    #[test]
    fn square_root_branches() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.5, 2.0)).unwrap();
        let df = differential(&f, &[1.0, 0.0], 1e-5).unwrap();
        assert!(df.exact && !df.on_singular_set);
        // branches ±1 with derivative ±1/2
        for (v, l) in df.values.iter().zip(&df.maps) {
            let s = v[0].signum();
            assert!((l - conformal(0.5 * s, 0.0)).amax() < 1e-12);
        }
        let fd = differential(&f.clone().without_branches(), &[1.0, 0.0], 1e-4).unwrap();
        assert!(!fd.exact && !fd.ambiguous);
        for (a, b) in fd.maps.iter().zip(&df.maps) {
            assert!((a - b).amax() <= 10.0 * 1e-8);
        }
    }

    #[test]
    fn diagonal_affine_map_has_equal_branches() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]);
        let f = MultiValuedMap::affine_branches(Region::unit_box(3), vec![a.clone(); 3], vec![vec![0.2, 0.1]; 3])
            .unwrap();
        for exact in [true, false] {
            let g = if exact { f.clone() } else { f.clone().without_branches() };
            let df = differential(&g, &[0.3, 0.4, 0.5], 1e-4).unwrap();
            assert!(df.on_singular_set);
            for l in &df.maps {
                assert!((l - &a).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_norm_of_square_root() {
        let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.5, 2.0)).unwrap();
        let df = differential(&f, &[0.0, 1.0], 1e-5).unwrap();
        assert!((df.frame_norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
