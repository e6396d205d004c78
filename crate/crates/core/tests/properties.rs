use almqr_core::almgren::{distance_value, AlmgrenPoint};
use almqr_core::covers::{BranchedCover, CatalogMap};
use almqr_core::forms::comass::{comass_covector, ComassSettings};
use almqr_core::forms::covector::{subsets, KCovector};
use almqr_core::forms::form::{symmetrize, KForm};
use almqr_core::forms::group::{GroupAction, Invariance};
use almqr_core::region::Region;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;

fn covector(dim: usize, k: usize, coeffs: &[f64]) -> KCovector {
    let mut out = KCovector::zero(dim, k);
    for (idx, c) in subsets(dim, k).iter().zip(coeffs.iter().cycle()) {
        out.add_term(idx, *c);
    }
    out
}

fn polar(r: f64, t: f64) -> Vec<f64> {
    vec![r * t.cos(), r * t.sin()]
}

fn sheared(k: u32, s: f64) -> BranchedCover {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]);
    BranchedCover::new(CatalogMap::Precomposed { a, b: vec![0.1, -0.2], base: Box::new(CatalogMap::PlanarPower(k)) })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fibers_map_onto_y_and_count_the_degree(k in 1u32..6, r in 0.05f64..3.0, t in 0.0f64..6.283) {
        let f = BranchedCover::power(k);
        let y = polar(r, t);
        let fiber = f.fiber(&y).unwrap();
        prop_assert_eq!(fiber.iter().map(|p| p.index).sum::<usize>(), k as usize);
        for p in &fiber {
            let fx = f.eval(&p.x).unwrap();
            prop_assert!((fx[0] - y[0]).abs() + (fx[1] - y[1]).abs() < 1e-9 * (1.0 + r));
        }
    }

    #[test]
    fn minv_recovers_the_source(k in 1u32..5, s in -0.8f64..0.8, r in 0.2f64..2.0, t in 0.0f64..6.283) {
        let f = sheared(k, s);
        let x = polar(r, t);
        let y = f.eval(&x).unwrap();
        let z = f.minv(&y).unwrap();
        prop_assert_eq!(z.d(), k as usize);
        let nearest = z.expand().iter().map(|p| ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(nearest < 1e-7, "nearest fiber point at {}", nearest);
    }

    #[test]
    fn push_forward_of_one_is_the_degree(k in 1u32..5, s in -0.8f64..0.8, r in 0.2f64..2.0, t in 0.0f64..6.283) {
        let f = sheared(k, s);
        let y = polar(r, t);
        let mass = f.push_forward(|_| 1.0, &y).unwrap();
        prop_assert!((mass - k as f64).abs() < 1e-12);
    }

    #[test]
    fn h_function_of_powers_is_explicit(k in 1u32..6, r in 0.05f64..3.0, t in 0.0f64..6.283) {
        // |Df| = k |x|^{k-1} on each of the k preimages, |x| = r^{1/k}
        let h = BranchedCover::power(k).h_function(&polar(r, t)).unwrap();
        let kf = k as f64;
        let expected = (1.0 / (kf * r.powf(2.0 * (kf - 1.0) / kf))).sqrt();
        prop_assert!((h - expected).abs() < 1e-9 * expected, "H = {} vs {}", h, expected);
    }

    #[test]
    fn distance_ignores_ordering(pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6), shift in 0usize..6) {
        let mut rotated = pts.clone();
        rotated.rotate_left(shift % pts.len());
        let a = AlmgrenPoint::from_points(2, pts).unwrap();
        let b = AlmgrenPoint::from_points(2, rotated).unwrap();
        prop_assert!(distance_value(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn wedge_is_graded_commutative(k in 1usize..3, l in 1usize..3, a in prop::collection::vec(-2.0f64..2.0, 1..7), b in prop::collection::vec(-2.0f64..2.0, 1..7)) {
        let dim = 4;
        let alpha = covector(dim, k, &a);
        let beta = covector(dim, l, &b);
        let ab = alpha.wedge(&beta).unwrap();
        let ba = beta.wedge(&alpha).unwrap().scale(if (k * l) % 2 == 0 { 1.0 } else { -1.0 });
        prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn wedge_is_associative(a in prop::collection::vec(-2.0f64..2.0, 5), b in prop::collection::vec(-2.0f64..2.0, 10), c in prop::collection::vec(-2.0f64..2.0, 5)) {
        let (x, y, z) = (covector(5, 1, &a), covector(5, 2, &b), covector(5, 1, &c));
        let left = x.wedge(&y).unwrap().wedge(&z).unwrap();
        let right = x.wedge(&y.wedge(&z).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-10);
    }

    #[test]
    fn pullback_respects_wedge_and_composition(a in prop::collection::vec(-2.0f64..2.0, 4), b in prop::collection::vec(-2.0f64..2.0, 6), m1 in prop::collection::vec(-1.0f64..1.0, 12), m2 in prop::collection::vec(-1.0f64..1.0, 9)) {
        let l1 = DMatrix::from_row_slice(4, 3, &m1);
        let l2 = DMatrix::from_row_slice(3, 3, &m2);
        let alpha = covector(4, 1, &a);
        let beta = covector(4, 2, &b);
        let lhs = alpha.wedge(&beta).unwrap().pullback(&l1).unwrap();
        let rhs = alpha.pullback(&l1).unwrap().wedge(&beta.pullback(&l1).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        let composed = beta.pullback(&(&l1 * &l2)).unwrap();
        let stepwise = beta.pullback(&l1).unwrap().pullback(&l2).unwrap();
        prop_assert!(composed.max_abs_diff(&stepwise) < 1e-10);
    }

    #[test]
    fn comass_lies_between_coefficients_and_euclidean_norm(coeffs in prop::collection::vec(-2.0f64..2.0, 6)) {
        let alpha = covector(4, 2, &coeffs);
        let c = comass_covector(&alpha, &ComassSettings::default()).value;
        let max_coef = coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(c >= max_coef - 1e-9, "comass {} below max coefficient {}", c, max_coef);
        prop_assert!(c <= alpha.euclidean_norm() + 1e-9, "comass {} above euclidean norm", c);
    }

    #[test]
    fn region_samples_are_contained(seed in 0u64..1000, inner in 0.1f64..1.0, width in 0.1f64..2.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for region in [Region::annulus(inner, inner + width), Region::unit_box(3)] {
            for _ in 0..20 {
                let x = region.sample(&mut rng);
                prop_assert!(region.contains(&x));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn symmetrization_is_idempotent(coeffs in prop::collection::vec(-1.0f64..1.0, 6), x in prop::collection::vec(-2.0f64..2.0, 6)) {
        let (n, d) = (2, 3);
        let base = covector(n * d, 1, &coeffs);
        let form = KForm::from_fn(n, d, 1, Invariance::None, move |p: &[f64]| base.scale(1.0 + p[0] * p[3] - p[5]));
        let action = GroupAction::full(n, d).unwrap();
        let once = symmetrize(&form, &action).unwrap();
        let twice = symmetrize(&once, &action).unwrap();
        prop_assert!(once.eval(&x).max_abs_diff(&twice.eval(&x)) < 1e-12);
        prop_assert!(once.invariance_defect(&action, &[x.clone()]) < 1e-12);
    }
}
