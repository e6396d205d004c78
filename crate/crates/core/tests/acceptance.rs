//! Acceptance gate: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Exits non-zero if any criterion fails.

use std::f64::consts::{E, PI};
use std::time::Instant;

use almqr_core::almgren::{barycenter_lipschitz_check, metric_axioms_check, metric_oracle_check};
use almqr_core::covers::{monodromy_check, preimage_measure_check, BranchedCover, CatalogMap, PreimageMeasureSettings};
use almqr_core::forms::{natural_comass_check, random_poly_form, symmetrize, symmetrization_check, GroupAction, Invariance, KCovector, KForm};
use almqr_core::modulus::{
    ahlfors_check, area_formula_check, energy_bound_check, modulus_refinement, pushforward_modulus_check,
    upper_gradient_check, AhlforsSettings, AreaSettings, CurveFamily, Curve, GeomQcSettings, ModulusSettings,
    ScalarField, UpperGradientSettings,
};
use almqr_core::mvcalc::{
    feps_check, generalized_inverse_check, qr_curve_check, split_pullback_check, weak_stokes_check, FepsSettings,
    MultiValuedMap, QrCurveSettings, StokesSettings, TestForm,
};
use almqr_core::numeric::rng_stream;
use almqr_core::region::Region;
use almqr_core::{CheckReport, Result};
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<(bool, String)>;

fn summary(rep: &CheckReport, keys: &[&str]) -> String {
    keys.iter()
        .filter_map(|k| rep.metrics.get(*k).map(|v| format!("{k}={v:.3e}")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn all(reports: &[CheckReport], keys: &[&str]) -> (bool, String) {
    let pass = reports.iter().all(|r| r.pass);
    let detail = reports.iter().map(|r| summary(r, keys)).collect::<Vec<_>>().join(" | ");
    (pass, detail)
}

fn precomposed(a: [f64; 4], b: [f64; 2], k: u32) -> BranchedCover {
    BranchedCover::new(CatalogMap::Precomposed {
        a: DMatrix::from_row_slice(2, 2, &a),
        b: b.to_vec(),
        base: Box::new(CatalogMap::PlanarPower(k)),
    })
    .expect("valid catalog map")
}

fn metric_oracle() -> Outcome {
    let rep = metric_oracle_check(10_000, 6, 4, 1)?;
    Ok((rep.pass, summary(&rep, &["mismatches", "max_abs_difference"])))
}

fn metric_axioms() -> Outcome {
    let rep = metric_axioms_check(10_000, 6, 4, 2, 1e-12)?;
    Ok((rep.pass, summary(&rep, &["max_triangle_excess", "max_asymmetry", "max_self_distance"])))
}

fn barycenter() -> Outcome {
    let rep = barycenter_lipschitz_check(10_000, 6, 4, 3)?;
    Ok((rep.pass, summary(&rep, &["max_ratio", "diagonal_equality_gap"])))
}

fn comass() -> Outcome {
    let rep = natural_comass_check(&[(2, 2), (2, 3), (3, 2), (3, 3)], 10, 4, 1e-6)?;
    Ok((rep.pass, summary(&rep, &["max_deviation", "witness_gap"])))
}

fn symmetrization() -> Outcome {
    let reports = [symmetrization_check(1, 3, 6, 12, 5)?, symmetrization_check(2, 2, 6, 12, 6)?, symmetrization_check(2, 3, 4, 6, 7)?];
    Ok(all(
        &reports,
        &["invariance_defect", "idempotence_defect", "linearity_defect", "derivative_commutation", "sup_norm_ratio"],
    ))
}

fn split_pullback() -> Outcome {
    let rep = split_pullback_check(10, 100, 8, 1e-9)?;
    Ok((rep.pass, summary(&rep, &["max_relative_defect"])))
}

fn weak_stokes() -> Outcome {
    let f = MultiValuedMap::inverse_of(&BranchedCover::power(2), Region::annulus(0.25, 2.0))?;
    let action = GroupAction::full(2, 2)?;
    let mut rng = rng_stream(9, 0);
    let mut reports = Vec::new();
    for _ in 0..5 {
        let omega = symmetrize(&KForm::from_poly(2, 2, random_poly_form(&mut rng, 4, 1, 3), Invariance::None)?, &action)?;
        for _ in 0..5 {
            // boxes inside the annulus, away from the branch value at 0
            let (cx, cy) = (rng.random_range(0.7..1.1), rng.random_range(-0.4..0.4));
            let (hx, hy) = (rng.random_range(0.15..0.35), rng.random_range(0.15..0.35));
            let c = rng.random_range(0.5..2.0);
            let test = TestForm::new(vec![cx - hx, cy - hy], vec![cx + hx, cy + hy], 4, KCovector::scalar(2, c))?;
            reports.push(weak_stokes_check(&f, &omega, &test, &StokesSettings::default())?);
        }
    }
    let worst = reports.iter().map(|r| r.metrics["rel_discrepancy"]).fold(0.0, f64::max);
    Ok((reports.iter().all(|r| r.pass), format!("pairs={} max_rel_discrepancy={worst:.3e}", reports.len())))
}

fn qr_curve() -> Outcome {
    let region = Region::annulus(0.2, 2.0);
    let mut detail = Vec::new();
    let mut pass = true;
    for k in 2..=4 {
        let rep = qr_curve_check(&BranchedCover::power(k), &region, &QrCurveSettings::default())?;
        let ok = rep.pass && rep.metrics["min_ratio"] >= 1.0 - 1e-9;
        pass &= ok;
        detail.push(format!("z^{k}: [{:.12}, {:.12}]", rep.metrics["min_ratio"], rep.max_ratio));
    }
    for (i, a) in [[1.5, 0.0, 0.0, 1.0], [1.0, 0.7, 0.0, 1.5], [2.0, -0.3, 0.4, 0.8]].iter().enumerate() {
        let cover = precomposed(*a, [0.1, -0.2], 2 + i as u32);
        let rep = qr_curve_check(&cover, &region, &QrCurveSettings { tol: 1e-6, ..Default::default() })?;
        pass &= rep.pass;
        detail.push(format!("affine{i}: max {:.6}", rep.max_ratio));
    }
    Ok((pass, detail.join(" ")))
}

fn upper_gradient_family() -> Result<CurveFamily> {
    let mut curves = CurveFamily::radial([0.0, 0.0], 0.5, 2.0, 16)?.curves;
    curves.extend(CurveFamily::circles([0.0, 0.0], 0.5, 2.0, 4)?.curves);
    curves.push(Curve::Polyline { points: vec![vec![0.6, 0.6], vec![1.5, 0.2], vec![-0.3, 1.2]] });
    CurveFamily::new(curves, Region::Annulus { center: [0.0, 0.0], inner: 0.5, outer: 2.0 })
}

fn upper_gradient() -> Outcome {
    let fam = upper_gradient_family()?;
    let settings = UpperGradientSettings::default();
    let mut reports = Vec::new();
    for k in 1..=4 {
        reports.push(upper_gradient_check(&BranchedCover::power(k), &fam, &settings)?);
    }
    reports.push(upper_gradient_check(&precomposed([2.0, 0.5, 0.0, 1.0], [0.1, -0.2], 3), &fam, &settings)?);
    reports.push(upper_gradient_check(&precomposed([1.0, 0.7, 0.0, 1.5], [0.0, 0.3], 2), &fam, &settings)?);
    Ok(all(&reports, &["violation_fraction", "max_relative_gap"]))
}

fn area_formula() -> Outcome {
    let settings = AreaSettings::default();
    let region = Region::annulus(0.5, 2.0);
    let mut reports = Vec::new();
    for k in 2..=4 {
        let cover = BranchedCover::power(k);
        for g in [ScalarField::One, ScalarField::NormSquared, ScalarField::InvDfPow] {
            reports.push(area_formula_check(&cover, g, &region, &settings)?);
        }
        reports.push(energy_bound_check(&cover, &region, &settings)?);
    }
    let cover = precomposed([1.5, 0.0, 0.0, 1.0], [0.0, 0.0], 2);
    reports.push(energy_bound_check(&cover, &region, &settings)?);
    let worst = reports.iter().filter_map(|r| r.metrics.get("relative_discrepancy")).fold(0.0f64, |a, b| a.max(*b));
    let slack = reports.iter().filter_map(|r| r.metrics.get("h_slack")).fold(f64::INFINITY, |a, b| a.min(*b));
    Ok((reports.iter().all(|r| r.pass), format!("max_rel_discrepancy={worst:.3e} min_energy_slack={slack:.3e}")))
}

fn generalized_inverse() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for k in 2..=4 {
        let rep = generalized_inverse_check(&BranchedCover::power(k), &Region::annulus(0.1, 2.0), 10_000, 10 + k as u64)?;
        let g = rep.metrics["max_abs_g"];
        pass &= rep.pass && g < 1e-8;
        worst = worst.max(g);
    }
    Ok((pass, format!("max_abs_g={worst:.3e}")))
}

fn geometric_qc() -> Outcome {
    let ring = CurveFamily::radial([0.0, 0.0], 1.0, E, 2048)?;
    let refine = modulus_refinement(&ring, &[128, 256], 2.0, &ModulusSettings::default(), 0.05, Some(2.0 * PI))?;
    let settings = GeomQcSettings::default();
    let fam = CurveFamily::radial([0.0, 0.0], 1.0, E, 1024)?;
    let mut reports = vec![refine];
    for cover in [BranchedCover::power(2), BranchedCover::power(3), precomposed([1.5, 0.0, 0.0, 1.0], [0.0, 0.0], 2)] {
        reports.push(pushforward_modulus_check(&cover, &fam, &settings)?);
    }
    Ok(all(&reports, &["relative_error", "ratio", "k_product"]))
}

fn ahlfors() -> Outcome {
    let centers: Vec<Vec<f64>> = (0..10)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 10.0 + 0.1;
            let rho = 0.5 + 0.15 * i as f64;
            vec![rho * t.cos(), rho * t.sin()]
        })
        .collect();
    let radii: Vec<f64> = (0..10).map(|i| 0.02 * 1.4f64.powi(i)).collect();
    let settings = AhlforsSettings { samples: 100_000, seed: 13, precision: 0.05 };
    let rep = ahlfors_check(&BranchedCover::power(2), &centers, &radii, &settings)?;
    Ok((rep.pass, summary(&rep, &["max_ratio", "violations", "imprecise", "balls"])))
}

fn fold(d: usize) -> Result<MultiValuedMap> {
    let a = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.4, 0.9]);
    let w: Vec<Vec<f64>> = match d {
        2 => vec![vec![1.0, 0.5], vec![-1.0, -0.5]],
        _ => vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![-0.5, -0.8]],
    };
    MultiValuedMap::folded(Region::unit_box(2), a, vec![0.0, 0.1], vec![1.0, -0.5], 0.2, w)
}

fn interpolation() -> Outcome {
    let settings = FepsSettings::default();
    let mut reports = Vec::new();
    for d in [2, 3] {
        for eps in [0.1, 0.3] {
            reports.push(feps_check(&fold(d)?, eps, 3000, &settings)?);
        }
    }
    Ok(all(&reports, &["lipschitz_ratio", "deviation_ratio"]))
}

fn preimage_measure() -> Outcome {
    let settings = PreimageMeasureSettings::default();
    let runs: Vec<(BranchedCover, Vec<f64>, f64)> = vec![
        (BranchedCover::power(2), vec![1.0, 0.0], 0.3),
        (BranchedCover::power(2), vec![0.1, 0.05], 0.5),
        (BranchedCover::power(3), vec![0.0, 1.2], 0.4),
        (precomposed([1.5, 0.0, 0.0, 1.0], [0.1, 0.0], 2), vec![0.5, 0.5], 0.3),
        (precomposed([1.0, 0.7, 0.0, 1.5], [0.0, 0.3], 3), vec![0.8, -0.4], 0.3),
    ];
    let mut reports = Vec::new();
    for (f, y, r) in &runs {
        reports.push(preimage_measure_check(f, y, *r, &settings)?);
    }
    Ok(all(&reports, &["ratio", "ratio_relative_se"]))
}

fn monodromy() -> Outcome {
    let rep = monodromy_check(&BranchedCover::power(2), &[0.0, 0.0], 1.0, 256, true, 1e-9)?;
    Ok((rep.pass, summary(&rep, &["has_monodromy", "loop_closure", "max_endpoint_displacement", "residual"])))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 16] = [
        ("01 metric oracle equivalence", metric_oracle),
        ("02 metric axioms", metric_axioms),
        ("03 barycenter Lipschitz", barycenter),
        ("04 comass of natural form", comass),
        ("05 symmetrization", symmetrization),
        ("06 tensor-split pullback", split_pullback),
        ("07 weak Stokes", weak_stokes),
        ("08 QR-curve sharpness", qr_curve),
        ("09 upper-gradient sandwich", upper_gradient),
        ("10 area formula and energy", area_formula),
        ("11 generalized inverse", generalized_inverse),
        ("12 geometric QC", geometric_qc),
        ("13 Ahlfors upper bound", ahlfors),
        ("14 interpolation f_eps", interpolation),
        ("15 preimage measure", preimage_measure),
        ("16 monodromy", monodromy),
    ];
    let only: Vec<String> =
        std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.to_lowercase().contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {name} ({:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed, {:.1}s total", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
