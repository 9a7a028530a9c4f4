//! Acceptance experiments.
//!
//! Each criterion returns an [`Outcome`] made of named [`Check`]s and passes
//! when every check passes. Errors raised inside a criterion become failing
//! checks; [`run_suite`] also turns panics into failures.

use crate::closed_forms::{
    difference_law, make_solution, normalization_constant_closed, normalization_constant_quadrature, ClosedFormSolution,
    Extras, SolutionKind,
};
use crate::diagnostics::{l1_distance, loss_rate, relative_mass_series, sup_decay_check};
use crate::error::Result;
use crate::fractional::{kernel, KernelGrid};
use crate::grid::RadialGrid;
use crate::grid_solver::{extinction_time, run, run_with_reference, InitialData, RunRecord};
use crate::grid_solver::{OuterBc, SolverConfig};
use crate::limits::{c1, concentration_scan, outer_mass_halving_ratio, ple1d_limit_scan, Ple1dOptions, ScanFamily, ScanRow};
use crate::regimes::{classify, critical_exponent, similarity_exponents, EquationSpec, Family, Regime, SimilarityExponents};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// One measured quantity against its expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `|measured − expected| ≤ tolerance`.
    pub fn abs(label: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured - expected).abs() <= tolerance;
        Check { label: label.into(), measured, expected, tolerance, pass }
    }

    /// `|measured/expected − 1| ≤ tolerance`.
    pub fn rel(label: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured / expected - 1.0).abs() <= tolerance;
        Check { label: label.into(), measured, expected, tolerance, pass }
    }

    /// `measured ≤ bound`; reported with tolerance 0.
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, expected: bound, tolerance: 0.0, pass: measured <= bound }
    }

    /// `measured ≥ bound`; reported with tolerance 0.
    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, expected: bound, tolerance: 0.0, pass: measured >= bound }
    }

    /// `measured ∈ [lo, hi]`, reported as centre ± half-width.
    pub fn within(label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        let pass = measured >= lo && measured <= hi;
        Check { label: label.into(), measured, expected: 0.5 * (lo + hi), tolerance: 0.5 * (hi - lo), pass }
    }

    /// A yes/no property, measured as 1 or 0.
    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Check { label: label.into(), measured: ok as u8 as f64, expected: 1.0, tolerance: 0.0, pass: ok }
    }

    fn error(label: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Check { label: format!("{}: {e}", label.into()), measured: f64::NAN, expected: f64::NAN, tolerance: 0.0, pass: false }
    }
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub note: Option<String>,
    pub seconds: f64,
}

impl Outcome {
    fn new(id: u8, title: &str, checks: Vec<Check>, note: Option<String>, start: Instant, limit_s: f64) -> Self {
        let seconds = start.elapsed().as_secs_f64();
        let mut checks = checks;
        checks.push(Check::at_most("runtime [s]", seconds, limit_s));
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Outcome { id, title: title.into(), checks, pass, note, seconds }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// `criterion <id> PASS|FAIL <title> (<k>/<n> checks) <seconds>`.
    pub fn line(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        format!(
            "criterion {:>2} {} {} ({}/{} checks, {:.1} s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            ok,
            self.checks.len(),
            self.seconds
        )
    }

    /// The summary line followed by one line per check and the note.
    pub fn report(&self) -> String {
        let mut out = self.line();
        for c in &self.checks {
            out.push_str(&format!(
                "\n    [{}] {}: measured {:.6e}, expected {:.6e} ± {:.3e}",
                if c.pass { "ok" } else { "FAIL" },
                c.label,
                c.measured,
                c.expected,
                c.tolerance
            ));
        }
        if let Some(n) = &self.note {
            out.push_str(&format!("\n    note: {n}"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Closed forms, exponent algebra, kernels and scans (1, 2, 3, 9, 10, 11).
    Fast,
    /// Every criterion, including the solver experiments.
    Full,
}

impl Suite {
    pub fn ids(self) -> &'static [u8] {
        match self {
            Suite::Fast => &[1, 2, 3, 9, 10, 11],
            Suite::Full => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(crate::error::validation(format!("unknown suite {other:?}; use fast or full"))),
        }
    }
}

/// Runs criterion `id` (1 to 11).
pub fn criterion(id: u8) -> Result<Outcome> {
    Ok(match id {
        1 => exponent_identities(),
        2 => closed_form_residuals(),
        3 => normalization_routes(),
        4 => barenblatt_regression(),
        5 => conservation_dichotomy(),
        6 => critical_conservation(),
        7 => logarithmic_and_tvf(),
        8 => relative_mass(),
        9 => fractional_kernel(),
        10 => concentration_scans(),
        11 => asymptotic_trends(),
        other => return Err(crate::error::validation(format!("no criterion {other}; ids run from 1 to 11"))),
    })
}

/// Runs the criteria of `suite` in order; a panicking criterion is reported as failed.
pub fn run_suite(suite: Suite) -> Vec<Outcome> {
    suite.ids().iter().map(|&id| run_caught(id)).collect()
}

fn run_caught(id: u8) -> Outcome {
    let start = Instant::now();
    match std::panic::catch_unwind(|| criterion(id)) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::new(id, "invalid criterion", vec![Check::error("criterion", e)], None, start, f64::INFINITY),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            Outcome::new(id, "panicked", vec![Check::error("panic", msg)], None, start, f64::INFINITY)
        }
    }
}

/// Appends `f()`'s checks, or one failing check carrying the error.
fn collect(checks: &mut Vec<Check>, label: &str, f: impl FnOnce() -> Result<Vec<Check>>) {
    match f() {
        Ok(mut c) => checks.append(&mut c),
        Err(e) => checks.push(Check::error(label, e)),
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", items.join(", "))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

// ---------------------------------------------------------------- criterion 1

const SAMPLES_PER_FAMILY: usize = 200;

/// Criterion 1 with the library's own exponents.
pub fn exponent_identities() -> Outcome {
    exponent_identities_with(&similarity_exponents)
}

/// Criterion 1 against an arbitrary exponent routine, so that a corrupted
/// routine can be shown to fail.
pub fn exponent_identities_with(exponents: &dyn Fn(&EquationSpec) -> Result<SimilarityExponents>) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d61_7373);
    let mut checks = Vec::new();
    let families = [
        Family::He,
        Family::PmeFde,
        Family::Ple,
        Family::Fhe,
        Family::Fpme,
        Family::Fple,
        Family::Dnle,
        Family::AnisoPme,
        Family::AnisoPle,
    ];
    for family in families {
        let mut worst: f64 = 0.0;
        let mut failures = 0usize;
        for _ in 0..SAMPLES_PER_FAMILY {
            let spec = sample_spec(family, &mut rng);
            match exponents(&spec).and_then(|e| identity_defects(&spec, &e)) {
                Ok(d) => worst = worst.max(d),
                Err(_) => failures += 1,
            }
        }
        checks.push(Check::abs(format!("{} max identity defect", family.name()), worst, 0.0, 1e-12));
        checks.push(Check::abs(format!("{} exponent errors", family.name()), failures as f64, 0.0, 0.0));
    }
    let mismatches = boundary_mismatches(&mut rng);
    checks.push(Check::abs("classify/critical_exponent boundary mismatches", mismatches as f64, 0.0, 0.0));
    Outcome::new(1, "exponent identities", checks, None, start, 1.0)
}

fn sample_spec(family: Family, rng: &mut ChaCha8Rng) -> EquationSpec {
    let n: usize = rng.gen_range(1..=4);
    let nf = n as f64;
    let s: f64 = rng.gen_range(0.05..0.95);
    match family {
        Family::He => EquationSpec::heat(n),
        Family::PmeFde => {
            let mc = ((nf - 2.0) / nf).max(0.0);
            EquationSpec::pme(rng.gen_range(mc + 0.01..3.0), n)
        }
        Family::Ple => {
            let pc = 2.0 * nf / (nf + 1.0);
            EquationSpec::ple(rng.gen_range(pc.max(1.0) + 0.01..4.0), n)
        }
        Family::Fhe => EquationSpec::fhe(s, n),
        Family::Fpme => {
            let mc = ((nf - 2.0 * s) / nf).max(0.0);
            EquationSpec::fpme(rng.gen_range(mc + 0.01..3.0), s, n)
        }
        Family::Fple => {
            let pc = 2.0 * nf / (nf + s);
            EquationSpec::fple(rng.gen_range(pc.max(1.0) + 0.01..4.0), s, n)
        }
        Family::Dnle => loop {
            let m: f64 = rng.gen_range(0.2..2.5);
            let p: f64 = rng.gen_range(1.1..3.5);
            if m * (p - 1.0) + p / nf > 1.01 {
                break EquationSpec::dnle(m, p, n);
            }
        },
        Family::AnisoPme => loop {
            let n = rng.gen_range(2..=4);
            let nf = n as f64;
            let exps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            if exps.iter().sum::<f64>() / nf > (nf - 2.0) / nf + 0.01 {
                break EquationSpec::aniso_pme(exps);
            }
        },
        Family::AnisoPle => loop {
            let n = rng.gen_range(2..=4);
            let nf = n as f64;
            let exps: Vec<f64> = (0..n).map(|_| rng.gen_range(1.05..1.95)).collect();
            if exps.iter().map(|p| 1.0 / p).sum::<f64>() < (nf + 1.0) / 2.0 - 0.01 {
                break EquationSpec::aniso_ple(exps);
            }
        },
        Family::LogDiff | Family::Tvf => unreachable!("fixed families are not sampled"),
    }
}

/// Largest defect among `α = Nβ` and the family's scaling identities.
fn identity_defects(spec: &EquationSpec, e: &SimilarityExponents) -> Result<f64> {
    let nf = spec.n as f64;
    let (a, b) = (e.alpha, e.beta);
    let mut d = (a - nf * b).abs();
    let mut push = |x: f64| d = d.max((x - 1.0).abs());
    match spec.family {
        Family::He => push(2.0 * b),
        Family::PmeFde => push(a * (spec.m()? - 1.0) + 2.0 * b),
        Family::Ple => {
            let p = spec.p()?;
            push(a * (p - 2.0) + p * b)
        }
        Family::Fhe => push(2.0 * spec.s()? * b),
        Family::Fpme => push(a * (spec.m()? - 1.0) + 2.0 * spec.s()? * b),
        Family::Fple => {
            let p = spec.p()?;
            push(a * (p - 2.0) + spec.s()? * p * b)
        }
        Family::Dnle => {
            let (m, p) = (spec.m()?, spec.p()?);
            push(a * (m * (p - 1.0) - 1.0) + p * b)
        }
        Family::AnisoPme | Family::AnisoPle => {
            let sig = e.sigmas.as_ref().ok_or_else(|| crate::error::validation("anisotropic exponents without sigmas"))?;
            let exps = spec.exps.as_ref().ok_or_else(|| crate::error::validation("missing exponents"))?;
            push(sig.iter().sum::<f64>());
            for (x, s) in exps.iter().zip(sig) {
                if spec.family == Family::AnisoPme {
                    push(a * (x - 1.0) + 2.0 * s * a);
                } else {
                    push(a * (x - 2.0) + x * s * a);
                }
            }
        }
        Family::LogDiff | Family::Tvf => {}
    }
    Ok(d)
}

/// Specs placed exactly at, just above and just below each critical exponent
/// must classify as Critical, GoodFast and VeryFast.
fn boundary_mismatches(rng: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for _ in 0..SAMPLES_PER_FAMILY {
        let n: usize = rng.gen_range(1..=5);
        let s: f64 = rng.gen_range(0.05..0.95);
        for family in [Family::PmeFde, Family::Ple, Family::Fpme, Family::Fple] {
            let sv = family.is_fractional().then_some(s);
            let Ok(xc) = critical_exponent(family, n, sv) else {
                bad += 1;
                continue;
            };
            let make = |x: f64| match family {
                Family::PmeFde => EquationSpec::pme(x, n),
                Family::Ple => EquationSpec::ple(x, n),
                Family::Fpme => EquationSpec::fpme(x, s, n),
                _ => EquationSpec::fple(x, s, n),
            };
            // m > 0 and p > 1 bound the admissible range; m_c ≤ 0 or p_c = 1 probes are skipped
            let floor = if family.needs_m() { 0.0 } else { 1.0 };
            for (x, want) in [(xc, Regime::Critical), (xc + 1e-9, Regime::GoodFast), (xc - 1e-9, Regime::VeryFast)] {
                if x <= floor {
                    continue;
                }
                match classify(&make(x)) {
                    Ok(r) if r.regime == want && r.critical_value == Some(xc) => {}
                    _ => bad += 1,
                }
            }
        }
    }
    bad
}

// ---------------------------------------------------------------- criterion 2

/// Residuals on three grids, each with twice the cells of the previous one.
fn observed_orders(sol: &ClosedFormSolution, t: f64, radius: f64, cells: usize) -> Result<(f64, f64)> {
    let mut r = [0.0; 3];
    for (l, ri) in r.iter_mut().enumerate() {
        let grid = RadialGrid::uniform(sol.spec.n, radius, cells << l)?;
        *ri = sol.residual_norm(&grid, t)?;
    }
    Ok(((r[0] / r[1]).log2(), (r[1] / r[2]).log2()))
}

/// Label, solution, evaluation time, outer radius and coarsest cell count.
pub type ResidualCase = (String, ClosedFormSolution, f64, f64, usize);

/// Solutions, evaluation times and coarsest grids of criterion 2.
pub fn residual_cases() -> Result<Vec<ResidualCase>> {
    let ex = Extras::default();
    let table = Arc::new(kernel(0.7, 1, &KernelGrid::default_for(1))?.table());
    Ok(vec![
        ("Gaussian N=1".into(), ClosedFormSolution::gaussian(1, 1.0)?, 1.0, 10.0, 200),
        ("BarenblattPME m=2 N=2".into(), ClosedFormSolution::barenblatt(&EquationSpec::pme(2.0, 2), 1.0)?, 1.0, 3.0, 100),
        ("BarenblattFDE m=0.75 N=3".into(), ClosedFormSolution::barenblatt(&EquationSpec::pme(0.75, 3), 1.0)?, 1.0, 10.0, 200),
        ("BarenblattPLE p=3 N=2".into(), ClosedFormSolution::barenblatt(&EquationSpec::ple(3.0, 2), 1.0)?, 1.0, 3.0, 100),
        ("BarenblattPLE p=1.5 N=2".into(), ClosedFormSolution::barenblatt(&EquationSpec::ple(1.5, 2), 1.0)?, 1.0, 10.0, 200),
        (
            "DNLEProfile m=0.8 p=1.8 N=2".into(),
            make_solution(SolutionKind::DNLEProfile, &EquationSpec::dnle(0.8, 1.8, 2), 1.0, &ex)?,
            1.0,
            10.0,
            200,
        ),
        ("FracKernelHalf N=1".into(), ClosedFormSolution::frac_kernel_half(1, 1.0)?, 1.0, 5.0, 100),
        ("FracKernelNumeric s=0.7 N=1".into(), ClosedFormSolution::frac_kernel_numeric(table, 1.0)?, 1.0, 5.0, 100),
        ("LogDiffExplicit a=1 T=2".into(), ClosedFormSolution::log_diffusion(1.0, 2.0)?, 1.0, 5.0, 200),
        ("FracExplicitS12 T=2".into(), ClosedFormSolution::frac_explicit_s12(2.0)?, 1.0, 5.0, 100),
        ("PMEBlowupM2 N=2 C=1 T=2".into(), ClosedFormSolution::pme_blowup(2, 1.0, 2.0)?, 1.0, 5.0, 200),
    ])
}

fn closed_form_residuals() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    collect(&mut checks, "closed-form cases", || {
        let mut out = Vec::new();
        let cases = residual_cases()?;
        let kinds: std::collections::HashSet<SolutionKind> = cases.iter().map(|c| c.1.kind).collect();
        out.push(Check::abs("solution kinds covered", kinds.len() as f64, SolutionKind::ALL.len() as f64, 0.0));
        for (name, sol, t, radius, cells) in cases {
            match observed_orders(&sol, t, radius, cells) {
                Ok((o1, o2)) => {
                    out.push(Check::within(format!("{name} order h→h/2"), o1, 1.7, 2.3));
                    out.push(Check::within(format!("{name} order h/2→h/4"), o2, 1.7, 2.3));
                }
                Err(e) => out.push(Check::error(name, e)),
            }
        }
        Ok(out)
    });
    let note = "FracExplicitS12 converges at third order: at s = 1/2 the second-order error term of the \
                singular-integral quadrature is negligible for this even integrand until h ≈ 1e-3, \
                so the observed order sits above the [1.7, 2.3] window";
    Outcome::new(2, "closed-form residual orders", checks, Some(note.into()), start, 120.0)
}

// ---------------------------------------------------------------- criterion 3

fn normalization_routes() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_726d);
    let mut checks = Vec::new();
    for (label, family) in [("(m,N)", Family::PmeFde), ("(p,N)", Family::Ple)] {
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..50 {
            let spec = sample_spec(family, &mut rng);
            let kind = match family {
                Family::PmeFde if spec.m == Some(1.0) => SolutionKind::Gaussian,
                Family::PmeFde if spec.m.unwrap_or(1.0) > 1.0 => SolutionKind::BarenblattPME,
                Family::PmeFde => SolutionKind::BarenblattFDE,
                _ => SolutionKind::BarenblattPLE,
            };
            match (normalization_constant_closed(kind, &spec, 1.0), normalization_constant_quadrature(kind, &spec, 1.0)) {
                (Ok(a), Ok(b)) => worst = worst.max((a / b - 1.0).abs()),
                _ => failures += 1,
            }
        }
        checks.push(Check::abs(format!("{label} max relative difference"), worst, 0.0, 1e-8));
        checks.push(Check::abs(format!("{label} failed samples"), failures as f64, 0.0, 0.0));
    }
    Outcome::new(3, "normalization cross-check", checks, None, start, 30.0)
}

// ---------------------------------------------------------------- criterion 4

fn barenblatt_regression() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    collect(&mut checks, "PME m=2 run", || {
        let spec = EquationSpec::pme(2.0, 1);
        let sol = ClosedFormSolution::barenblatt(&spec, 1.0)?;
        let grid = RadialGrid::uniform(1, 4.0, 400)?;
        let cfg = SolverConfig::new(2.5e-3, OuterBc::ZeroFlux, vec![2.0]);
        let rec = run_with_reference(&spec, &InitialData::Solution(&sol, 1.0), &grid, &cfg, Some(&sol))?;
        let m0 = rec.ledger.masses[0];
        let drift = rec.ledger.masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        let err = l1_distance(&rec.checkpoints[0], &grid, &sol, 2.0)?;
        Ok(vec![Check::at_most("final L1 error / M", err / m0, 0.02), Check::at_most("ZeroFlux mass drift", drift, 1e-8)])
    });
    Outcome::new(4, "Barenblatt regression", checks, None, start, 60.0)
}

// ---------------------------------------------------------------- criterion 5

/// `(1 − r²)₊²` scaled to mass `mass` in dimension `n`.
pub fn bump(n: usize, mass: f64) -> impl Fn(f64) -> f64 {
    // ∫ (1 − r²)² r^{N−1} dr = 8 / (N(N+2)(N+4))
    let nf = n as f64;
    let unit = crate::special::omega(n) * 8.0 / (nf * (nf + 2.0) * (nf + 4.0));
    move |r: f64| mass / unit * (1.0 - r * r).max(0.0).powi(2)
}

fn truncated_grid(n: usize, radius: f64) -> Result<RadialGrid> {
    RadialGrid::stretched(n, radius, 2.0, 0.02, 1.03, 1.0)
}

fn dirichlet_run(spec: &EquationSpec, n: usize, radius: f64, mass: f64, times: Vec<f64>) -> Result<RunRecord> {
    let grid = truncated_grid(n, radius)?;
    let cfg = SolverConfig::new(1e-4, OuterBc::Dirichlet0, times).growing(1.05, 1e-3);
    let f = bump(n, mass);
    run(spec, &InitialData::Function(&f), &grid, &cfg)
}

const RADII: [f64; 3] = [20.0, 40.0, 80.0];

fn conservation_dichotomy() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    collect(&mut checks, "m=0.75 runs", || {
        let spec = EquationSpec::pme(0.75, 3);
        let mut loss = Vec::new();
        for r in RADII {
            let rec = dirichlet_run(&spec, 3, r, 1.0, vec![1.0])?;
            loss.push(rec.ledger.masses[0] - rec.ledger.mass_at(1.0).unwrap_or(f64::NAN));
        }
        Ok(vec![
            Check::holds(format!("m=0.75 loss decreasing in R {}", list(&loss)), strictly_decreasing(&loss)),
            Check::at_most("m=0.75 loss at R=80 / M", loss[2], 0.01),
        ])
    });
    collect(&mut checks, "m=0.2 runs", || {
        let spec = EquationSpec::pme(0.2, 3);
        let mut out = Vec::new();
        for r in RADII {
            let mut ext = [0.0; 2];
            for (i, amp) in [1.0, 2.0].into_iter().enumerate() {
                let rec = dirichlet_run(&spec, 3, r, amp, vec![1.0])?;
                if amp == 1.0 {
                    let lost = 1.0 - rec.ledger.mass_at(1.0).unwrap_or(f64::NAN) / rec.ledger.masses[0];
                    out.push(Check::at_least(format!("m=0.2 R={r} loss / M"), lost, 0.1));
                }
                // the threshold scales with the data, as the group law requires
                ext[i] = extinction_time(&rec, 1e-6 * rec.ledger.sup_u[0]).unwrap_or(f64::NAN);
            }
            out.push(Check::holds(format!("m=0.2 R={r} extinction within the horizon"), ext.iter().all(|t| t.is_finite())));
            out.push(Check::rel(format!("m=0.2 R={r} T(2u0)/T(u0)"), ext[1] / ext[0], 2f64.powf(0.8), 0.05));
        }
        Ok(out)
    });
    Outcome::new(5, "conservation dichotomy", checks, None, start, 600.0)
}

// ---------------------------------------------------------------- criterion 6

fn critical_conservation() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (label, spec, n) in [("FDE m=1/3 N=3", EquationSpec::pme(1.0 / 3.0, 3), 3), ("PLE p=4/3 N=2", EquationSpec::ple(4.0 / 3.0, 2), 2)] {
        collect(&mut checks, label, || {
            let mut loss = Vec::new();
            for r in RADII {
                let rec = dirichlet_run(&spec, n, r, 100.0, vec![1.0])?;
                loss.push(1.0 - rec.ledger.mass_at(1.0).unwrap_or(f64::NAN) / rec.ledger.masses[0]);
            }
            Ok(vec![Check::holds(format!("{label} loss fraction decreasing in R {}", list(&loss)), strictly_decreasing(&loss))])
        });
    }
    let note = "data of mass 100: at the critical exponents the escaping tail is nearly non-integrable, \
                so unit-mass data loses almost everything by t = 1 on any desk-scale ball";
    Outcome::new(6, "critical-exponent conservation", checks, Some(note.into()), start, 600.0)
}

// ---------------------------------------------------------------- criterion 7

/// Fitted loss rates of the regularized total variation flow for each `ε`.
pub fn tvf_slopes(eps: &[f64]) -> Result<Vec<f64>> {
    let grid = RadialGrid::stretched(1, 4.0, 1.5, 0.005, 1.02, 0.05)?;
    let f = bump(1, 1.0);
    eps.iter()
        .map(|&e| {
            let mut cfg = SolverConfig::new(1e-5, OuterBc::Dirichlet0, vec![0.1, 0.2, 0.3]).growing(1.05, 5e-4);
            cfg.reg_eps = e;
            let rec = run(&EquationSpec::tvf(), &InitialData::Function(&f), &grid, &cfg)?;
            Ok(loss_rate(&rec.ledger, (0.05, 0.3))?.slope)
        })
        .collect()
}

fn logarithmic_and_tvf() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    collect(&mut checks, "logarithmic diffusion", || {
        let sol = ClosedFormSolution::log_diffusion(1.0, 1.0)?;
        let grid = RadialGrid::stretched(2, 20.0, 2.0, 0.02, 1.03, 0.5)?;
        let times: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
        let cfg = SolverConfig::new(1e-4, OuterBc::Reference, times).growing(1.05, 2e-3);
        let rec = run_with_reference(&EquationSpec::log_diffusion(), &InitialData::Solution(&sol, 0.0), &grid, &cfg, Some(&sol))?;
        let fit = loss_rate(&rec.ledger, (0.05, 0.5))?;
        Ok(vec![Check::rel("explicit solution loss rate", fit.slope, -8.0 * PI, 0.02)])
    });
    collect(&mut checks, "total variation flow", || {
        let eps = [1e-3, 5e-4, 2.5e-4];
        let slopes = tvf_slopes(&eps)?;
        let gaps: Vec<f64> = slopes.iter().map(|s| (s + 2.0).abs()).collect();
        Ok(vec![
            Check::holds(format!("slopes approach -2 as eps halves {}", list(&slopes)), strictly_decreasing(&gaps)),
            Check::rel("slope at eps = 2.5e-4", slopes[2], -2.0, 0.05),
        ])
    });
    Outcome::new(7, "logarithmic diffusion and TVF", checks, None, start, 300.0)
}

// ---------------------------------------------------------------- criterion 8

fn ordered_pair(spec: &EquationSpec, n: usize, radius: f64, bc: OuterBc) -> Result<(RunRecord, RunRecord)> {
    let grid = RadialGrid::uniform(n, radius, 200)?;
    let times: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let cfg = SolverConfig::new(1e-3, bc, times).growing(1.02, 5e-3);
    let v0 = bump(n, 1.0);
    let b = bump(n, 0.5);
    let u0 = |r: f64| v0(r) + b(2.0 * r);
    let a = run(spec, &InitialData::Function(&u0), &grid, &cfg)?;
    let b = run(spec, &InitialData::Function(&v0), &grid, &cfg)?;
    Ok((a, b))
}

fn relative_mass() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (label, spec, n) in [("PME m=2 N=2", EquationSpec::pme(2.0, 2), 2), ("FDE m=0.75 N=3", EquationSpec::pme(0.75, 3), 3)] {
        collect(&mut checks, label, || {
            let (a, b) = ordered_pair(&spec, n, 6.0, OuterBc::ZeroFlux)?;
            let rel = relative_mass_series(&a, &b, 1.0)?;
            let m = a.ledger.masses[0];
            let r0 = rel.ledger.masses[0];
            let drift = rel.ledger.masses.iter().map(|x| (x - r0).abs()).fold(0.0, f64::max);
            let order = a
                .checkpoints
                .iter()
                .zip(&b.checkpoints)
                .flat_map(|(u, v)| u.values.iter().zip(&v.values).map(|(x, y)| x - y))
                .fold(f64::INFINITY, f64::min);
            Ok(vec![
                Check::at_most(format!("{label} relative-mass drift / M"), drift / m, 1e-5),
                Check::at_least(format!("{label} min(u − v)"), order, -1e-10),
            ])
        });
    }
    collect(&mut checks, "FDE m=0.2 against zero", || {
        let spec = EquationSpec::pme(0.2, 3);
        let grid = RadialGrid::uniform(3, 6.0, 200)?;
        let cfg = SolverConfig::new(1e-4, OuterBc::Dirichlet0, vec![0.05, 0.1]).growing(1.02, 1e-3);
        let f = bump(3, 1.0);
        let zero = |_r: f64| 0.0;
        let a = run(&spec, &InitialData::Function(&f), &grid, &cfg)?;
        let b = run(&spec, &InitialData::Function(&zero), &grid, &cfg)?;
        let rel = relative_mass_series(&a, &b, 1.0)?;
        let l = &rel.ledger.masses;
        Ok(vec![Check::at_most("m=0.2 relative mass at t=0.1 / initial", l[l.len() - 1] / l[0], 0.5)])
    });
    collect(&mut checks, "blow-up family", || {
        let (c1, c2, t_end) = (2.0, 0.5, 2.0);
        let mut spread: f64 = 0.0;
        let mut law_err: f64 = 0.0;
        for n in [1, 2, 3] {
            let u1 = ClosedFormSolution::pme_blowup(n, c1, t_end)?;
            let u2 = ClosedFormSolution::pme_blowup(n, c2, t_end)?;
            for t in [0.0, 0.5, 1.0, 1.5, 1.9] {
                let law = difference_law(c1, c2, &u1.spec, t, t_end)?;
                let diffs: Vec<f64> = (0..=100)
                    .map(|i| {
                        let r = 0.05 * i as f64;
                        Ok(u1.evaluate_radial(r, t)? - u2.evaluate_radial(r, t)?)
                    })
                    .collect::<Result<_>>()?;
                let (lo, hi) = diffs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(*d), b.max(*d)));
                spread = spread.max((hi - lo) / law);
                law_err = law_err.max(diffs.iter().map(|d| (d / law - 1.0).abs()).fold(0.0, f64::max));
            }
        }
        Ok(vec![
            Check::at_most("blow-up difference spatial spread (relative)", spread, 1e-12),
            Check::at_most("blow-up difference vs (C1−C2)(T−t)^(−N/(N+2)) (relative)", law_err, 1e-12),
        ])
    });
    Outcome::new(8, "relative mass", checks, None, start, 180.0)
}

// ---------------------------------------------------------------- criterion 9

fn fractional_kernel() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    for n in [1, 2] {
        for s in [0.3, 0.5, 0.7] {
            collect(&mut checks, &format!("kernel s={s} N={n}"), || {
                let k = kernel(s, n, &KernelGrid::default_for(n))?;
                let mut out = vec![Check::abs(format!("tail slope s={s} N={n}"), k.tail_slope, -(n as f64 + 2.0 * s), 0.1)];
                if n == 1 && s == 0.5 {
                    let err = k
                        .r
                        .iter()
                        .zip(&k.f)
                        .filter(|(r, _)| **r <= 10.0)
                        .map(|(r, f)| (f - 1.0 / (PI * (1.0 + r * r))).abs())
                        .fold(0.0, f64::max);
                    out.push(Check::at_most("s=1/2 N=1 sup-norm distance to the Poisson kernel on |x| ≤ 10", err, 1e-4));
                }
                Ok(out)
            });
        }
    }
    Outcome::new(9, "fractional kernel", checks, None, start, 120.0)
}

// ---------------------------------------------------------------- criterion 10

/// `ε₀ 2^{−k}`, `k = 0..count`.
pub fn halvings(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps0 / 2f64.powi(k as i32)).collect()
}

fn monotone_checks(label: &str, rows: &[ScanRow]) -> Vec<Check> {
    let ln_c: Vec<f64> = rows.iter().map(|r| r.ln_c).collect();
    let neg_ln_k: Vec<f64> = rows.iter().map(|r| -r.ln_k).collect();
    vec![
        Check::holds(format!("{label} rows clean"), rows.iter().all(ScanRow::is_clean)),
        Check::holds(format!("{label} C strictly decreasing"), strictly_decreasing(&ln_c)),
        Check::holds(format!("{label} K strictly increasing"), strictly_decreasing(&neg_ln_k)),
    ]
}

fn concentration_scans() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    let eps = halvings(5e-3, 8);
    collect(&mut checks, "PME N=3 scan", || {
        let rows = concentration_scan(ScanFamily::Pme, 3, &eps)?;
        let mut out = monotone_checks("PME N=3", &rows);
        let target = outer_mass_halving_ratio(3);
        for w in rows.windows(2) {
            out.push(Check::rel(
                format!("outer-mass ratio eps {:.2e}→{:.2e}", w[0].eps, w[1].eps),
                w[1].outer_mass_frac / w[0].outer_mass_frac,
                target,
                0.3,
            ));
        }
        Ok(out)
    });
    collect(&mut checks, "PLE N=2 scan", || Ok(monotone_checks("PLE N=2", &concentration_scan(ScanFamily::Ple, 2, &eps)?)));
    collect(&mut checks, "PLE N=1 p→1 scan", || {
        let opts = Ple1dOptions::default();
        let rows = ple1d_limit_scan(&halvings(0.05, 5), &opts)?;
        let mut out = Vec::new();
        for r in &rows {
            out.push(Check::at_most(
                format!("uniform bound ratio eps={:.2e}", r.eps),
                r.bound_ratio.max(r.bound_ratio_limit),
                1.01,
            ));
        }
        let at5: Vec<f64> = rows.iter().map(|r| r.fluxes.iter().find(|f| f.0 == 5.0).map_or(f64::NAN, |f| f.1)).collect();
        let gaps: Vec<f64> = at5.iter().map(|f| (f - 2.0).abs()).collect();
        out.push(Check::holds(format!("flux at R=5 approaches 2 {}", list(&at5)), strictly_decreasing(&gaps)));
        out.push(Check::rel("flux at R=5, t=0.2, smallest eps", at5[at5.len() - 1], 2.0, 0.1));
        Ok(out)
    });
    let note = "scans start at eps = 5e-3 (PME, PLE N=2), where the unit ball first holds a visible part of the mass; \
                the outer-mass halving ratio is 2^(-(N-2)/2)";
    Outcome::new(10, "concentration scans", checks, Some(note.into()), start, 120.0)
}

// ---------------------------------------------------------------- criterion 11

fn asymptotic_trends() -> Outcome {
    let start = Instant::now();
    let mut checks = Vec::new();
    collect(&mut checks, "log C and log K trends", || {
        let n = 3;
        let rows = concentration_scan(ScanFamily::Pme, n, &halvings(2.5e-3, 12))?;
        let target = c1(n);
        let gap_c: Vec<f64> = rows.iter().map(|r| (r.eps * r.ln_c / r.eps.ln() - target).abs()).collect();
        // log K = −γ log C, γ → N/2: the log K constant must be N/2 · c₁ = (N−2)/N
        let c2 = 0.5 * n as f64 * target;
        let gap_k: Vec<f64> = rows.iter().map(|r| (-r.eps * r.ln_k / r.eps.ln() - c2).abs()).collect();
        let consistency = rows.iter().map(|r| (r.ln_k + r.gamma * r.ln_c).abs() / r.ln_k.abs()).fold(0.0, f64::max);
        let frozen: Vec<f64> = rows.iter().map(|r| ((r.ln_k + n as f64 * r.ln_d) / r.ln_k).abs()).collect();
        Ok(vec![
            Check::holds("eps·log C/log eps approaches c1 = 2(N-2)/N² monotonically", strictly_decreasing(&gap_c)),
            Check::holds("-eps·log K/log eps approaches (N-2)/N monotonically", strictly_decreasing(&gap_k)),
            Check::abs("log K + γ log C (relative)", consistency, 0.0, 1e-12),
            Check::abs("(N/2)·c1 against (N-2)/N", c2, (n as f64 - 2.0) / n as f64, 1e-15),
            Check::holds("|log(K d^N)/log K| decreasing", strictly_decreasing(&frozen)),
        ])
    });
    collect(&mut checks, "sup decay at m_c", || {
        let spec = EquationSpec::pme(1.0 / 3.0, 3);
        let times: Vec<f64> = (1..=15).map(|i| 0.1 * i as f64).collect();
        let rec = dirichlet_run(&spec, 3, 80.0, 100.0, times)?;
        let fit = sup_decay_check(&rec, (0.5, 1.4))?;
        Ok(vec![
            Check::holds("log(1/sup u) fits t^3 better than log t", fit.superlinear),
            Check::at_least("r2 of the t^3 fit", fit.power.r2, 0.9),
        ])
    });
    collect(&mut checks, "extinction-time scaling", || {
        let spec = EquationSpec::pme(0.2, 3);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for lambda in [1.0, 2.0, 4.0] {
            let rec = dirichlet_run(&spec, 3, 20.0, lambda, vec![1.0])?;
            let t = extinction_time(&rec, 1e-6 * rec.ledger.sup_u[0]).ok_or_else(|| crate::Error::Numerical("no extinction".into()))?;
            x.push(f64::ln(lambda));
            y.push(t.ln());
        }
        let (slope, _, _) = crate::diagnostics::ols(&x, &y)?;
        Ok(vec![Check::rel("d log T / d log ||u0|| (constant c(m,N) not tested)", slope, 0.8, 0.05)])
    });
    let note = "sharp whole-space constants are not reproducible at desk scale; these are trend tests only";
    Outcome::new(11, "asymptotic trends", checks, Some(note.into()), start, 300.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_requested_mass() {
        for n in 1..=3 {
            let f = bump(n, 2.5);
            let m = crate::quadrature::integrate(|r| f(r) * r.powi(n as i32 - 1), 0.0, 1.0, 0.0, 1e-13).unwrap().value
                * crate::special::omega(n);
            assert!((m - 2.5).abs() < 1e-12, "{n} {m}");
        }
    }

    #[test]
    fn check_constructors() {
        assert!(Check::within("x", 2.0, 1.7, 2.3).pass);
        assert!(!Check::within("x", 2.95, 1.7, 2.3).pass);
        assert!(Check::rel("x", 1.04, 1.0, 0.05).pass);
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn unknown_criterion() {
        assert!(criterion(0).is_err());
        assert!("slow".parse::<Suite>().is_err());
    }
}
