//! Dispatch from a [`RunConfig`] to the verifiers of the core library.

use std::f64::consts::PI;

use almqr_core::almgren::{barycenter_lipschitz_check, metric_axioms_check, metric_oracle_check};
use almqr_core::covers::{
    continuity_check, monodromy_check, preimage_measure_check, pseudomonotone_check, BranchedCover,
    PreimageMeasureSettings,
};
use almqr_core::forms::{comass, natural_comass_check, symmetrization_check, ComassSettings};
use almqr_core::modulus::{
    ahlfors_check, area_formula_check, energy_bound_check, jacobian_vs_h_check, metric_qc_check, modulus_refinement,
    pushforward_modulus_check, upper_gradient_check, AhlforsSettings, AreaSettings, CurveFamily, FamilySpec,
    GeomQcSettings, ModulusSettings, ScalarField, UpperGradientSettings,
};
use almqr_core::mvcalc::{
    feps_check, generalized_inverse_check, qr_curve_check, split_pullback_check, weak_stokes_check, FepsSettings,
    MultiValuedMap, QrCurveSettings, StokesSettings,
};
use almqr_core::numeric::halton_in_box;
use almqr_core::region::Region;
use almqr_core::report::Table;
use almqr_core::CheckReport;

use crate::config::{Check, RunConfig};
use crate::RunError;

fn need<'a, T>(value: &'a Option<T>, field: &str, check: Check) -> Result<&'a T, RunError> {
    value.as_ref().ok_or_else(|| RunError::Usage(format!("check `{}` needs field `{field}`", check.name())))
}

fn cover(cfg: &RunConfig) -> Result<BranchedCover, RunError> {
    Ok(need(&cfg.map, "map", cfg.check)?.build()?)
}

/// The configured region, or a default annulus around the origin for planar
/// maps.
fn region(cfg: &RunConfig, n: usize, inner: f64, outer: f64) -> Result<Region, RunError> {
    match (&cfg.region, n) {
        (Some(r), _) => Ok(r.clone()),
        (None, 2) => Ok(Region::annulus(inner, outer)),
        (None, _) => Err(RunError::Usage(format!("check `{}` needs field `region`", cfg.check.name()))),
    }
}

fn family(cfg: &RunConfig) -> Result<CurveFamily, RunError> {
    Ok(CurveFamily::from_spec(need(&cfg.family, "family", cfg.check)?)?)
}

fn point(cfg: &RunConfig) -> Result<Vec<f64>, RunError> {
    Ok(need(&cfg.point, "point", cfg.check)?.clone())
}

/// `sup |ω|` over unit frames at the given points, compared with an
/// optional expected value.
fn comass_report(cfg: &RunConfig) -> Result<CheckReport, RunError> {
    let form = need(&cfg.form, "form", cfg.check)?.build()?.to_kform()?;
    let dim = form.dim();
    let points = match &cfg.points {
        Some(p) => p.clone(),
        None => halton_in_box(cfg.samples.unwrap_or(10), &vec![-1.0; dim], &vec![1.0; dim]),
    };
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(RunError::Usage(format!("field `points`: {p:?} does not lie in R^{dim}")));
    }
    let settings = ComassSettings::default();
    let results: Vec<_> = points.iter().map(|x| comass(&form, x, &settings)).collect();
    let max = results.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let min = results.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let converged = results.iter().all(|r| r.converged);
    let tol = cfg.tol.unwrap_or(1e-6);
    let mut report = CheckReport::new("comass", "lemma-comass-natural");
    report.n_samples = points.len() as u64;
    report.max_ratio = max;
    report.metric("max_comass", max).metric("min_comass", min).metric("converged", converged as u8 as f64);
    report.pass = converged;
    if let Some(e) = cfg.expect {
        let dev = results.iter().map(|r| (r.value - e).abs()).fold(0.0, f64::max);
        report.metric("max_deviation", dev).threshold("expected", e).threshold("tol", tol);
        report.pass &= dev <= tol;
    }
    report.table = Some(Table {
        columns: (0..dim).map(|i| format!("x{i}")).chain(["comass".to_string()]).collect(),
        rows: points.iter().zip(&results).map(|(p, r)| p.iter().copied().chain([r.value]).collect()).collect(),
    });
    Ok(report)
}

/// Runs the configured verifier.
pub fn dispatch(cfg: &RunConfig) -> Result<CheckReport, RunError> {
    let seed = cfg.seed;
    let report = match cfg.check {
        Check::MetricOracle => metric_oracle_check(cfg.samples.unwrap_or(10_000), 6, 4, seed)?,
        Check::MetricAxioms => metric_axioms_check(cfg.samples.unwrap_or(10_000), 6, 4, seed, cfg.tol.unwrap_or(1e-12))?,
        Check::Barycenter => barycenter_lipschitz_check(cfg.samples.unwrap_or(10_000), 6, 4, seed)?,
        Check::Comass => comass_report(cfg)?,
        Check::NaturalComass => {
            let shapes = match cfg.shape {
                Some([n, d]) => vec![(n, d)],
                None => vec![(2, 2), (2, 3), (3, 2), (3, 3)],
            };
            natural_comass_check(&shapes, cfg.samples.unwrap_or(10), seed, cfg.tol.unwrap_or(1e-6))?
        }
        Check::Symmetrization => {
            let [n, d] = cfg.shape.unwrap_or([2, 2]);
            symmetrization_check(n, d, 6, cfg.samples.unwrap_or(12), seed)?
        }
        Check::SplitPullback => split_pullback_check(10, cfg.samples.unwrap_or(100), seed, cfg.tol.unwrap_or(1e-9))?,
        Check::Stokes => {
            let c = cover(cfg)?;
            let f = MultiValuedMap::inverse_of(&c, region(cfg, c.n(), 0.25, 2.0)?)?;
            let omega = need(&cfg.form, "form", cfg.check)?.build()?.to_kform()?;
            let test = need(&cfg.testform, "testform", cfg.check)?.build()?;
            let defaults = StokesSettings::default();
            let settings = StokesSettings {
                orders: cfg.grid.clone().unwrap_or(defaults.orders),
                tol: cfg.tol.unwrap_or(defaults.tol),
                ..defaults
            };
            weak_stokes_check(&f, &omega, &test, &settings)?
        }
        Check::QrCurve => {
            let c = cover(cfg)?;
            let settings = QrCurveSettings {
                samples: cfg.samples.unwrap_or(10_000),
                seed,
                tol: cfg.tol.unwrap_or(if c.distortion_is_exact() { 1e-9 } else { 1e-6 }),
                ..Default::default()
            };
            qr_curve_check(&c, &region(cfg, c.n(), 0.1, 2.0)?, &settings)?
        }
        Check::GeneralizedInverse => {
            let c = cover(cfg)?;
            generalized_inverse_check(&c, &region(cfg, c.n(), 0.1, 2.0)?, cfg.samples.unwrap_or(10_000), seed)?
        }
        Check::Feps => {
            let f = need(&cfg.fold, "fold", cfg.check)?.build()?;
            let settings = FepsSettings { seed, ..Default::default() };
            feps_check(&f, *need(&cfg.epsilon, "epsilon", cfg.check)?, cfg.samples.unwrap_or(3000), &settings)?
        }
        Check::Continuity => {
            let c = cover(cfg)?;
            continuity_check(&c, &point(cfg)?, cfg.radius.unwrap_or(0.5), 8, cfg.samples.unwrap_or(64))?
        }
        Check::Pseudomonotone => {
            let c = cover(cfg)?;
            pseudomonotone_check(&c, &point(cfg)?, cfg.radius.unwrap_or(0.5), 8, cfg.samples.unwrap_or(256))?
        }
        Check::PreimageMeasure => {
            let c = cover(cfg)?;
            let settings = PreimageMeasureSettings {
                samples: cfg.samples.unwrap_or(200_000),
                seed,
                ..Default::default()
            };
            preimage_measure_check(&c, &point(cfg)?, *need(&cfg.radius, "radius", cfg.check)?, &settings)?
        }
        Check::Monodromy => {
            let c = cover(cfg)?;
            let center = cfg.point.clone().unwrap_or_else(|| vec![0.0; c.n()]);
            let expect = cfg.expect.unwrap_or(1.0) != 0.0;
            monodromy_check(&c, &center, cfg.radius.unwrap_or(1.0), cfg.samples.unwrap_or(256), expect, cfg.tol.unwrap_or(1e-9))?
        }
        Check::UpperGradient => {
            let settings = UpperGradientSettings {
                samples: cfg.samples.unwrap_or(64),
                tol: cfg.tol.unwrap_or(1e-6),
                ..Default::default()
            };
            upper_gradient_check(&cover(cfg)?, &family(cfg)?, &settings)?
        }
        Check::AreaFormula => {
            let c = cover(cfg)?;
            let settings = AreaSettings { tol: cfg.tol.unwrap_or(1e-3), ..Default::default() };
            area_formula_check(&c, cfg.field.unwrap_or(ScalarField::One), &region(cfg, c.n(), 0.5, 2.0)?, &settings)?
        }
        Check::EnergyBound => {
            let c = cover(cfg)?;
            let settings = AreaSettings { tol: cfg.tol.unwrap_or(1e-3), ..Default::default() };
            energy_bound_check(&c, &region(cfg, c.n(), 0.5, 2.0)?, &settings)?
        }
        Check::JacobianVsH => {
            let c = cover(cfg)?;
            let r = region(cfg, c.n(), 0.5, 2.0)?;
            jacobian_vs_h_check(&c, &r, cfg.samples.unwrap_or(1000), seed, cfg.tol.unwrap_or(1e-3))?
        }
        Check::MetricQc => {
            let radii = cfg.radii.clone().unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05, 0.01]);
            metric_qc_check(&cover(cfg)?, &point(cfg)?, &radii, cfg.samples.unwrap_or(512))?
        }
        Check::Ahlfors => {
            let c = cover(cfg)?;
            let centers = need(&cfg.points, "points", cfg.check)?;
            let radii = need(&cfg.radii, "radii", cfg.check)?;
            let settings = AhlforsSettings {
                samples: cfg.samples.unwrap_or(100_000),
                seed,
                precision: cfg.tol.unwrap_or(0.05),
            };
            ahlfors_check(&c, centers, radii, &settings)?
        }
        Check::Modulus => {
            let fam = family(cfg)?;
            let exponent = cfg.exponent.unwrap_or(fam.dim() as f64);
            let grids = cfg.grid.clone().unwrap_or_else(|| vec![128, 256]);
            // Mod_2 of the radial family of an annulus is 2π / log(R/r)
            let reference = match cfg.family.as_ref() {
                Some(FamilySpec::Radial { inner, outer, .. }) if exponent == 2.0 => Some(2.0 * PI / (outer / inner).ln()),
                _ => None,
            };
            modulus_refinement(&fam, &grids, exponent, &ModulusSettings::default(), cfg.tol.unwrap_or(0.05), reference)?
        }
        Check::GeomQc => {
            let settings = GeomQcSettings {
                res: cfg.grid.as_ref().and_then(|g| g.last().copied()).unwrap_or(256),
                slack: cfg.tol.unwrap_or(0.05),
                ..Default::default()
            };
            pushforward_modulus_check(&cover(cfg)?, &family(cfg)?, &settings)?
        }
    };
    Ok(report)
}
