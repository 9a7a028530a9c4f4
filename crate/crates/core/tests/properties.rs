//! Property tests of the algebraic and numerical invariants.

use masslab::closed_forms::{normalization_constant_closed, normalization_constant_quadrature};
use masslab::diagnostics::{ols, relative_mass_series, tail_exponent};
use masslab::fractional::{FracGrid, FracOperator};
use masslab::grid_solver::{run, InitialData};
use masslab::limits::{concentration_scan, ScanFamily};
use masslab::regimes::{classify, critical_exponent, similarity_exponents};
use masslab::{EquationSpec, Family, OuterBc, RadialGrid, Regime, SolutionKind, SolverConfig};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pme_exponents_balance(n in 1usize..=5, m in 0.05f64..4.0) {
        let mc = critical_exponent(Family::PmeFde, n, None).unwrap();
        prop_assume!(m > mc + 1e-6);
        let e = similarity_exponents(&EquationSpec::pme(m, n)).unwrap();
        prop_assert!(close(e.alpha, n as f64 * e.beta, 1e-13));
        prop_assert!(close(e.alpha * (m - 1.0) + 2.0 * e.beta, 1.0, 1e-13));
    }

    #[test]
    fn ple_exponents_balance(n in 1usize..=5, p in 1.05f64..5.0) {
        let pc = critical_exponent(Family::Ple, n, None).unwrap();
        prop_assume!(p > pc + 1e-6);
        let e = similarity_exponents(&EquationSpec::ple(p, n)).unwrap();
        prop_assert!(close(e.alpha, n as f64 * e.beta, 1e-13));
        prop_assert!(close(e.alpha * (p - 2.0) + p * e.beta, 1.0, 1e-13));
    }

    #[test]
    fn fractional_exponents_balance(n in 1usize..=3, m in 0.3f64..3.0, s in 0.05f64..0.95) {
        let mc = critical_exponent(Family::Fpme, n, Some(s)).unwrap();
        prop_assume!(m > mc + 1e-6);
        let e = similarity_exponents(&EquationSpec::fpme(m, s, n)).unwrap();
        prop_assert!(close(e.alpha * (m - 1.0) + 2.0 * s * e.beta, 1.0, 1e-13));
    }

    #[test]
    fn conservation_verdict_follows_the_threshold(n in 3usize..=5, m in 0.05f64..2.0) {
        let mc = critical_exponent(Family::PmeFde, n, None).unwrap();
        prop_assume!((m - mc).abs() > 1e-9);
        let r = classify(&EquationSpec::pme(m, n)).unwrap();
        prop_assert_eq!(r.conserves_mass, m > mc);
        prop_assert_eq!(r.regime == Regime::VeryFast, m < mc);
        prop_assert_eq!(r.exponents.is_some(), m > mc);
    }

    #[test]
    fn ols_recovers_exact_lines(slope in -50.0f64..50.0, icpt in -10.0f64..10.0, len in 2usize..60) {
        let x: Vec<f64> = (0..len).map(|i| 0.3 * i as f64 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|t| slope * t + icpt).collect();
        let (s, c, r2) = ols(&x, &y).unwrap();
        prop_assert!(close(s, slope, 1e-10));
        prop_assert!(close(c, icpt, 1e-10));
        prop_assert!(r2 > 1.0 - 1e-10 || slope.abs() < 1e-12);
    }

    #[test]
    fn tail_exponent_of_power_data(k in 0.5f64..6.0, a in 1e-3f64..1e3) {
        let r: Vec<f64> = (1..400).map(|i| 0.5 * i as f64).collect();
        let u: Vec<f64> = r.iter().map(|x| a * x.powf(-k)).collect();
        let f = tail_exponent(&r, &u, (5.0, 150.0)).unwrap();
        prop_assert!(close(f.slope, -k, 1e-10));
        prop_assert!(close(f.intercept, a.ln(), 1e-9));
    }

    #[test]
    fn normalization_routes_agree(n in 1usize..=4, m in 1.05f64..3.0, mass in 0.1f64..10.0) {
        let spec = EquationSpec::pme(m, n);
        let a = normalization_constant_closed(SolutionKind::BarenblattPME, &spec, mass).unwrap();
        let b = normalization_constant_quadrature(SolutionKind::BarenblattPME, &spec, mass).unwrap();
        prop_assert!(close(a, b, 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The matrix is symmetric: `⟨Af, g⟩ = ⟨f, Ag⟩`, and positive: `⟨Af, f⟩ > 0`.
    #[test]
    fn fractional_operator_is_symmetric_positive(
        s in 0.1f64..0.9,
        f in prop::collection::vec(-1.0f64..1.0, 40),
        g in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let op = FracOperator::new(s, FracGrid::new(1, 0.25, 40).unwrap()).unwrap();
        let af = op.apply_values(&f).unwrap();
        let ag = op.apply_values(&g).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let scale = op.spectral_bound() * 40.0;
        prop_assert!((dot(&af, &g) - dot(&f, &ag)).abs() <= 1e-11 * scale);
        prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
        prop_assert!(dot(&af, &f) > 0.0);
    }

    #[test]
    fn fft_and_dense_routes_agree(s in 0.1f64..0.9, f in prop::collection::vec(-1.0f64..1.0, 64)) {
        let op = FracOperator::new(s, FracGrid::new(2, 0.3, 8).unwrap()).unwrap();
        let a = op.apply_values(&f).unwrap();
        let b = op.apply_dense(&f).unwrap();
        let tol = 1e-11 * op.spectral_bound();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= tol);
        }
    }

    /// In the asymptotic range `C` falls and the peak `K` rises as `ε` shrinks.
    #[test]
    fn scan_is_monotone(e in 1e-4f64..5e-3, ratio in 0.2f64..0.9) {
        for (family, n) in [(ScanFamily::Pme, 3), (ScanFamily::Ple, 2)] {
            let rows = concentration_scan(family, n, &[e, e * ratio]).unwrap();
            prop_assert!(rows.iter().all(|r| r.is_clean()));
            prop_assert!(rows[1].ln_c < rows[0].ln_c);
            prop_assert!(rows[1].ln_k > rows[0].ln_k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// The relative mass series is exactly the difference of the two ledgers,
    /// and ordered data stay ordered.
    #[test]
    fn relative_mass_is_the_ledger_difference(m in 1.5f64..3.0, lift in 0.1f64..1.0) {
        let spec = EquationSpec::pme(m, 1);
        let grid = RadialGrid::uniform(1, 4.0, 80).unwrap();
        let config = SolverConfig::new(5e-3, OuterBc::ZeroFlux, vec![0.1, 0.2]);
        let v0 = |r: f64| (1.0 - r * r).max(0.0);
        let u0 = move |r: f64| v0(r) + lift * (1.0 - 4.0 * r * r).max(0.0);
        let a = run(&spec, &InitialData::Function(&u0), &grid, &config).unwrap();
        let b = run(&spec, &InitialData::Function(&v0), &grid, &config).unwrap();
        let rel = relative_mass_series(&a, &b, 2.0).unwrap();
        for i in 0..rel.ledger.len() {
            prop_assert_eq!(rel.ledger.masses[i], a.ledger.masses[i] - b.ledger.masses[i]);
        }
        for (u, v) in a.checkpoints.iter().zip(&b.checkpoints) {
            prop_assert!(u.values.iter().zip(&v.values).all(|(x, y)| x - y >= -1e-10));
        }
    }
}
