//! End-to-end checks of the public API against values derived by hand.

use approx::assert_relative_eq;
use masslab::closed_forms::ClosedFormSolution;
use masslab::diagnostics::{l1_distance, mass_lost};
use masslab::grid_solver::{extinction_time, run, run_with_reference, InitialData};
use masslab::limits::{c1, outer_mass_halving_ratio};
use masslab::output::{ledger_csv, Metadata};
use masslab::regimes::{classify, similarity_exponents};
use masslab::{EquationSpec, Error, OuterBc, RadialGrid, Regime, SolverConfig};
use std::f64::consts::PI;

#[test]
fn barenblatt_constant_in_one_dimension() {
    // m = 2, N = 1: F(y) = (C − y²/12)_+, so M = (4/3)·√12·C^{3/2}.
    let sol = ClosedFormSolution::barenblatt(&EquationSpec::pme(2.0, 1), 1.0).unwrap();
    let expected = (3.0 / (4.0 * 12f64.sqrt())).powf(2.0 / 3.0);
    assert_relative_eq!(sol.c, expected, max_relative = 1e-12);
    assert_relative_eq!(sol.evaluate_radial(0.0, 1.0).unwrap(), expected, max_relative = 1e-12);
    assert_relative_eq!(sol.mass_at(3.0).unwrap(), 1.0, max_relative = 1e-10);
}

#[test]
fn heat_and_poisson_kernels_at_the_origin() {
    let g = ClosedFormSolution::gaussian(1, 1.0).unwrap();
    assert_relative_eq!(g.evaluate_radial(0.0, 1.0).unwrap(), 1.0 / (4.0 * PI).sqrt(), max_relative = 1e-13);
    let p = ClosedFormSolution::frac_kernel_half(1, 1.0).unwrap();
    let t: f64 = 0.5;
    let x: f64 = 1.5;
    assert_relative_eq!(p.evaluate_radial(x, t).unwrap(), t / (PI * (t * t + x * x)), max_relative = 1e-13);
}

#[test]
fn exponents_of_named_cases() {
    let e = similarity_exponents(&EquationSpec::pme(2.0, 3)).unwrap();
    assert_relative_eq!(e.alpha, 3.0 / 5.0, max_relative = 1e-15);
    let e = similarity_exponents(&EquationSpec::ple(3.0, 2)).unwrap();
    assert_relative_eq!(e.alpha, 2.0 / 5.0, max_relative = 1e-15);
    let e = similarity_exponents(&EquationSpec::aniso_pme(vec![0.8, 0.8])).unwrap();
    assert_relative_eq!(e.alpha, 1.25, max_relative = 1e-15);
    assert!(matches!(
        similarity_exponents(&EquationSpec::pme(0.2, 3)),
        Err(Error::NoFiniteMassSelfSimilar(_))
    ));
    assert_eq!(classify(&EquationSpec::pme(1.0 / 3.0, 3)).unwrap().regime, Regime::Critical);
    assert!(classify(&EquationSpec::log_diffusion()).unwrap().remark.is_some());
}

#[test]
fn limit_constants() {
    assert_relative_eq!(c1(3), 2.0 / 9.0, max_relative = 1e-15);
    assert_relative_eq!(outer_mass_halving_ratio(3), 0.5f64.sqrt(), max_relative = 1e-15);
}

#[test]
fn zero_flux_run_conserves_mass_and_tracks_barenblatt() {
    let spec = EquationSpec::pme(2.0, 1);
    let sol = ClosedFormSolution::barenblatt(&spec, 1.0).unwrap();
    let grid = RadialGrid::uniform(1, 4.0, 200).unwrap();
    let config = SolverConfig::new(5e-3, OuterBc::ZeroFlux, vec![1.5, 2.0]);
    let rec = run(&spec, &InitialData::Solution(&sol, 1.0), &grid, &config).unwrap();
    assert!(mass_lost(&rec.ledger).unwrap().abs() < 1e-10);
    let last = rec.checkpoints.last().unwrap();
    assert_relative_eq!(last.time, 2.0, epsilon = 1e-12);
    assert!(l1_distance(last, &grid, &sol, 2.0).unwrap() < 2e-2);
}

#[test]
fn reference_run_follows_the_heat_kernel() {
    let spec = EquationSpec::heat(2);
    let sol = ClosedFormSolution::gaussian(2, 1.0).unwrap();
    let grid = RadialGrid::uniform(2, 8.0, 160).unwrap();
    let config = SolverConfig::new(2e-3, OuterBc::Reference, vec![1.5]);
    let rec = run_with_reference(&spec, &InitialData::Solution(&sol, 1.0), &grid, &config, Some(&sol)).unwrap();
    let last = rec.checkpoints.last().unwrap();
    // piecewise-constant cells against a smooth profile: the L1 gap is O(h)
    let e = l1_distance(last, &grid, &sol, 1.5).unwrap();
    assert!(e < 1.5e-2, "{e}");
    assert_relative_eq!(last.mass(&grid), 1.0, max_relative = 1e-4);
}

#[test]
fn fast_diffusion_extinguishes_under_dirichlet_data() {
    let spec = EquationSpec::pme(0.2, 3);
    let grid = RadialGrid::uniform(3, 3.0, 60).unwrap();
    let config = SolverConfig::new(1e-4, OuterBc::Dirichlet0, vec![0.5]).growing(1.05, 5e-3);
    let u0 = |r: f64| (1.0 - r * r).max(0.0).powi(2);
    let rec = run(&spec, &InitialData::Function(&u0), &grid, &config).unwrap();
    let t = extinction_time(&rec, 1e-6).expect("extinction before t = 0.5");
    assert!(t > 0.0 && t < 0.5);
    assert!(rec.ledger.closure_defect() < 1e-8);
}

#[test]
fn ledger_csv_carries_metadata() {
    let spec = EquationSpec::pme(2.0, 1);
    let grid = RadialGrid::uniform(1, 2.0, 20).unwrap();
    let config = SolverConfig::new(1e-2, OuterBc::ZeroFlux, vec![0.05]);
    let u0 = |r: f64| (1.0 - r * r).max(0.0);
    let rec = run(&spec, &InitialData::Function(&u0), &grid, &config).unwrap();
    let csv = ledger_csv(&rec.ledger, &Metadata::new().with("family", "PME_FDE"));
    assert!(csv.lines().any(|l| l.starts_with('#') && l.contains("family")));
    assert!(csv.lines().filter(|l| !l.starts_with('#')).count() > rec.ledger.len());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(RadialGrid::uniform(0, 1.0, 10), Err(Error::Validation(_))));
    assert!(matches!(similarity_exponents(&EquationSpec::ple(0.5, 2)), Err(Error::Validation(_))));
    let bad = SolverConfig::new(-1.0, OuterBc::ZeroFlux, vec![1.0]);
    assert!(bad.validate().is_err());
}

#[test]
fn corrupted_exponents_fail_the_identity_criterion() {
    let bad = |s: &EquationSpec| {
        let mut e = similarity_exponents(s)?;
        e.beta *= 1.0 + 1e-9;
        Ok(e)
    };
    let o = masslab::verify::exponent_identities_with(&bad);
    assert!(!o.pass);
    let failed: Vec<_> = o.failed_checks().collect();
    assert!(failed.iter().all(|c| c.measured.is_finite() && c.expected.is_finite()));
    assert!(o.report().contains("FAIL"));
}
