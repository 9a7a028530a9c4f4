//! Explicit solutions: constructors, evaluation, masses, normalization and
//! PDE residuals.
//!
//! Profiles, with `y = |x| t^{−β}` and `θ = p/(p−1)`:
//!
//! | kind              | `u(x, t)`                                              | `k`                          |
//! |-------------------|--------------------------------------------------------|------------------------------|
//! | Gaussian          | `t^{−N/2} C e^{−y²/4}`                                  | `1/4`                        |
//! | BarenblattPME     | `t^{−α} (C − k y²)_+^{1/(m−1)}`                          | `β(m−1)/(2m)`                |
//! | BarenblattFDE     | `t^{−α} (C + k y²)^{−1/(1−m)}`                           | `β(1−m)/(2m)`                |
//! | BarenblattPLE p>2 | `t^{−α} (C − k y^θ)_+^{(p−1)/(p−2)}`                     | `((p−2)/p) β^{1/(p−1)}`      |
//! | BarenblattPLE p<2 | `t^{−α} (C + k y^θ)^{−(p−1)/(2−p)}`                      | `((2−p)/p) β^{1/(p−1)}`      |
//! | DNLEProfile       | `t^{−α} (C + k y^θ)^{−(p−1)/(1−m(p−1))}`                 | `β^{1/(p−1)} (1−m(p−1))/(mp)` |
//! | FracKernelHalf    | `t^{−N} C (1 + |x/t|²)^{−(N+1)/2}`                       | `1`                          |
//! | FracKernelNumeric | `t^{−N/(2s)} M F(y)`, `F` tabulated                     | `1`                          |
//! | LogDiffExplicit   | `8a²(T−t)_+ / (a² + |x|²)²`                              | `1`, `C = a²`                |
//! | FracExplicitS12   | `2(T−t)_+ / (1 + x²)`                                   | `1`, `C = 1`                 |
//! | PMEBlowupM2       | `k|x|²/(T−t) + C (T−t)^{−N/(N+2)}`                      | `1/(4(N+2))`                 |
//!
//! The FDE profile uses `|x|²/t^{2β}`; this is the only choice compatible with the
//! self-similar form and `α = Nβ`.
//!
//! The DNLE profile solves `u_t = Δ_p(u^m) = div(|∇u^m|^{p−2} ∇u^m)`; it reduces
//! to the PLE profile at `m = 1` and to the FDE profile at `p = 2`.
//!
//! `FracExplicitS12` solves `u_t + (−Δ)^{1/2} log u = 0` in 1D, represented as
//! FPME with `m = 0` (logarithmic nonlinearity).

use crate::error::{range, Error, Result};
use crate::fractional::{apply_analytic, KernelTable};
use crate::grid::RadialGrid;
use crate::regimes::{classify, similarity_exponents, EquationSpec, Family, Regime};
use crate::special::{ln_beta, ln_omega, omega};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolutionKind {
    Gaussian,
    BarenblattPME,
    BarenblattFDE,
    BarenblattPLE,
    DNLEProfile,
    FracKernelHalf,
    FracKernelNumeric,
    LogDiffExplicit,
    FracExplicitS12,
    PMEBlowupM2,
}

impl SolutionKind {
    pub const ALL: [SolutionKind; 10] = [
        SolutionKind::Gaussian,
        SolutionKind::BarenblattPME,
        SolutionKind::BarenblattFDE,
        SolutionKind::BarenblattPLE,
        SolutionKind::DNLEProfile,
        SolutionKind::FracKernelHalf,
        SolutionKind::FracKernelNumeric,
        SolutionKind::LogDiffExplicit,
        SolutionKind::FracExplicitS12,
        SolutionKind::PMEBlowupM2,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassLawKind {
    Constant,
    LinearLoss,
    Extinct,
}

/// Time law of the total mass: `M(t) = (M0 − rate·t)_+`, `T = M0/rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassLaw {
    pub kind: MassLawKind,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub rate: f64,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
}

impl MassLaw {
    pub fn constant(m0: f64) -> Self {
        MassLaw { kind: MassLawKind::Constant, m0, rate: 0.0, t_end: None }
    }

    pub fn linear_loss(m0: f64, rate: f64) -> Self {
        MassLaw { kind: MassLawKind::LinearLoss, m0, rate, t_end: Some(m0 / rate) }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.kind {
            MassLawKind::Constant => self.m0,
            MassLawKind::LinearLoss => (self.m0 - self.rate * t).max(0.0),
            MassLawKind::Extinct => 0.0,
        }
    }
}

/// Extra parameters for [`make_solution`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Extras {
    /// Extinction or blow-up time.
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    /// Width `a` of the logarithmic-diffusion solution.
    #[serde(rename = "a")]
    pub width: Option<f64>,
    /// Free constant of the blow-up family.
    #[serde(rename = "C")]
    pub c: Option<f64>,
}

/// An exact solution with its constants.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormSolution {
    pub spec: EquationSpec,
    pub kind: SolutionKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub k: f64,
    /// Conserved mass, or the mass at `t = 0` for the loss kinds; infinite for the blow-up family.
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    #[serde(rename = "a")]
    pub width: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip)]
    table: Option<Arc<KernelTable>>,
}

/// Profile shape `amp · (c ± k y^θ)^{±γ}` or a Gaussian.
#[derive(Debug, Clone, Copy)]
enum Shape {
    Gauss { amp: f64 },
    Decay { amp: f64, c: f64, k: f64, theta: f64, gamma: f64 },
    Compact { amp: f64, c: f64, k: f64, theta: f64, gamma: f64 },
}

impl Shape {
    fn eval(&self, y: f64) -> f64 {
        match *self {
            Shape::Gauss { amp } => amp * (-0.25 * y * y).exp(),
            Shape::Decay { amp, c, k, theta, gamma } => amp * (c + k * y.powf(theta)).powf(-gamma),
            Shape::Compact { amp, c, k, theta, gamma } => amp * (c - k * y.powf(theta)).max(0.0).powf(gamma),
        }
    }

    /// Shape with the spatial variable stretched: `F(r/L)`.
    fn stretched(self, l: f64) -> Shape {
        match self {
            Shape::Gauss { .. } => self,
            Shape::Decay { amp, c, k, theta, gamma } => Shape::Decay { amp, c, k: k * l.powf(-theta), theta, gamma },
            Shape::Compact { amp, c, k, theta, gamma } => Shape::Compact { amp, c, k: k * l.powf(-theta), theta, gamma },
        }
    }
}

/// `ω_N ∫_0^∞ F(r) r^{N−1} dr` by adaptive quadrature, with the power tail of
/// decaying shapes integrated term by term from its binomial series.
fn shape_mass(shape: &Shape, n: usize, gauss_scale: f64) -> Result<f64> {
    let k = n as i32 - 1;
    let f = |r: f64| shape.eval(r) * r.powi(k);
    let tol = 1e-14;
    let w = omega(n);
    match *shape {
        Shape::Gauss { .. } => {
            let l = gauss_scale;
            let breaks: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|b| b * l).collect();
            let f = |r: f64| shape.eval(r / l) * r.powi(k);
            Ok(w * crate::quadrature::integrate_panels(f, &breaks, 0.0, tol)?.value)
        }
        Shape::Compact { c, k: kk, theta, .. } => {
            let support = (c / kk).powf(1.0 / theta);
            let breaks = [0.0, 0.5 * support, 0.9 * support, support];
            Ok(w * crate::quadrature::integrate_panels(f, &breaks, 0.0, tol)?.value)
        }
        Shape::Decay { amp, c, k: kk, theta, gamma } => {
            let nf = n as f64;
            if theta * gamma <= nf {
                return Err(Error::DivergentMass(format!(
                    "profile decays like r^-{} which is not integrable in dimension {n}",
                    theta * gamma
                )));
            }
            let scale = (c / kk).powf(1.0 / theta);
            let big = scale * 100f64.powf(1.0 / theta);
            let mut breaks = vec![0.0, 0.25 * scale, 0.5 * scale];
            let mut b = scale;
            while b < big {
                breaks.push(b);
                b *= 2.0;
            }
            breaks.push(big);
            let inner = crate::quadrature::integrate_panels(f, &breaks, 0.0, tol)?.value;
            // ∫_R^∞ (c + k r^θ)^{−γ} r^{N−1} dr = Σ_j C(−γ, j) c^j k^{−γ−j} R^{N−θ(γ+j)} / (θ(γ+j) − N)
            let x = c / (kk * big.powf(theta));
            let lead = kk.powf(-gamma) * big.powf(nf - theta * gamma);
            let mut coef = 1.0;
            let mut xp = 1.0;
            let mut tail = 0.0;
            for j in 0..400 {
                let jf = j as f64;
                let term = coef * xp / (theta * (gamma + jf) - nf);
                tail += term;
                if term.abs() < 1e-18 * tail.abs() {
                    break;
                }
                coef *= -(gamma + jf) / (jf + 1.0);
                xp *= x;
            }
            Ok(w * (inner + amp * lead * tail))
        }
    }
}

fn dnle_gamma(m: f64, p: f64) -> f64 {
    (p - 1.0) / (1.0 - m * (p - 1.0))
}

/// Shape parameters `(θ, γ, log k, decays)` of the self-similar Barenblatt-type kinds.
/// `k` itself overflows near `p = 1`, where it grows like `β^{1/(p−1)}`.
pub(crate) fn profile_params(kind: SolutionKind, spec: &EquationSpec, beta: f64) -> Result<(f64, f64, f64, bool)> {
    Ok(match kind {
        SolutionKind::BarenblattPME => {
            let m = spec.m()?;
            (2.0, 1.0 / (m - 1.0), (beta * (m - 1.0) / (2.0 * m)).ln(), false)
        }
        SolutionKind::BarenblattFDE => {
            let m = spec.m()?;
            (2.0, 1.0 / (1.0 - m), (beta * (1.0 - m) / (2.0 * m)).ln(), true)
        }
        SolutionKind::BarenblattPLE => {
            let p = spec.p()?;
            let theta = p / (p - 1.0);
            let ln_b = beta.ln() / (p - 1.0);
            if p > 2.0 {
                (theta, (p - 1.0) / (p - 2.0), ((p - 2.0) / p).ln() + ln_b, false)
            } else {
                (theta, (p - 1.0) / (2.0 - p), ((2.0 - p) / p).ln() + ln_b, true)
            }
        }
        SolutionKind::DNLEProfile => {
            let (m, p) = (spec.m()?, spec.p()?);
            let ln_b = beta.ln() / (p - 1.0);
            (p / (p - 1.0), dnle_gamma(m, p), ln_b + ((1.0 - m * (p - 1.0)) / (m * p)).ln(), true)
        }
        SolutionKind::FracKernelHalf => (2.0, 0.5 * (spec.n as f64 + 1.0), 0.0, true),
        other => return Err(Error::NotApplicable(format!("{other:?} is not a Barenblatt-type profile"))),
    })
}

fn check_kind(kind: SolutionKind, spec: &EquationSpec) -> Result<()> {
    spec.validate()?;
    let fam = spec.family;
    let want = |f: Family| -> Result<()> {
        if fam == f {
            Ok(())
        } else {
            Err(range(format!("{kind:?} needs family {}, got {}", f.name(), fam.name())))
        }
    };
    match kind {
        SolutionKind::Gaussian => want(Family::He),
        SolutionKind::BarenblattPME => {
            want(Family::PmeFde)?;
            let m = spec.m()?;
            if m > 1.0 {
                Ok(())
            } else {
                Err(range(format!("BarenblattPME needs m > 1, got m = {m}")))
            }
        }
        SolutionKind::BarenblattFDE => {
            want(Family::PmeFde)?;
            let m = spec.m()?;
            let mc = (spec.n as f64 - 2.0) / spec.n as f64;
            if m > mc && m < 1.0 {
                Ok(())
            } else {
                Err(range(format!("BarenblattFDE needs m_c = {mc} < m < 1, got m = {m}")))
            }
        }
        SolutionKind::BarenblattPLE => {
            want(Family::Ple)?;
            let p = spec.p()?;
            let pc = 2.0 * spec.n as f64 / (spec.n as f64 + 1.0);
            if p > pc && p != 2.0 {
                Ok(())
            } else {
                Err(range(format!("BarenblattPLE needs p > p_c = {pc} and p != 2, got p = {p}")))
            }
        }
        SolutionKind::DNLEProfile => {
            want(Family::Dnle)?;
            let r = classify(spec)?;
            if r.regime == Regime::GoodFast {
                Ok(())
            } else {
                Err(range(format!(
                    "DNLEProfile needs m(p−1) < 1 < m(p−1) + p/N, got regime {:?}",
                    r.regime
                )))
            }
        }
        SolutionKind::FracKernelHalf => {
            want(Family::Fhe)?;
            if spec.s()? == 0.5 {
                Ok(())
            } else {
                Err(range("FracKernelHalf needs s = 1/2"))
            }
        }
        SolutionKind::FracKernelNumeric => {
            want(Family::Fhe)?;
            if spec.n <= 2 {
                Ok(())
            } else {
                Err(range("FracKernelNumeric is tabulated for N ≤ 2"))
            }
        }
        SolutionKind::LogDiffExplicit => want(Family::LogDiff),
        SolutionKind::FracExplicitS12 => {
            if fam == Family::Fpme && spec.m == Some(0.0) && spec.s == Some(0.5) && spec.n == 1 {
                Ok(())
            } else {
                Err(range("FracExplicitS12 needs FPME with m = 0 (log), s = 1/2, N = 1"))
            }
        }
        SolutionKind::PMEBlowupM2 => {
            want(Family::PmeFde)?;
            if spec.m()? == 2.0 {
                Ok(())
            } else {
                Err(range("PMEBlowupM2 needs m = 2"))
            }
        }
    }
}

/// Closed-form value of `C` from the Beta-function identities.
pub fn normalization_constant_closed(kind: SolutionKind, spec: &EquationSpec, mass: f64) -> Result<f64> {
    Ok(ln_normalization_constant(kind, spec, mass)?.exp())
}

/// `log C` from the Beta-function identities; finite even where `C` itself
/// under- or overflows, as it does near the critical exponents.
pub fn ln_normalization_constant(kind: SolutionKind, spec: &EquationSpec, mass: f64) -> Result<f64> {
    check_kind(kind, spec)?;
    let nf = spec.n as f64;
    match kind {
        SolutionKind::Gaussian => Ok(mass.ln() - 0.5 * nf * (4.0 * PI).ln()),
        SolutionKind::FracKernelHalf => Ok(mass.ln() + ln_gamma(0.5 * (nf + 1.0)) - 0.5 * (nf + 1.0) * PI.ln()),
        SolutionKind::BarenblattPME | SolutionKind::BarenblattFDE | SolutionKind::BarenblattPLE | SolutionKind::DNLEProfile => {
            let beta = similarity_exponents(spec)?.beta;
            let (theta, gamma, ln_k, decays) = profile_params(kind, spec, beta)?;
            let a = nf / theta;
            let lnw = ln_omega(spec.n);
            let lnc = if decays {
                if gamma <= a {
                    return Err(Error::DivergentMass(format!("γ = {gamma} ≤ N/θ = {a}")));
                }
                (lnw + ln_beta(a, gamma - a) - theta.ln() - mass.ln() - a * ln_k) / (gamma - a)
            } else {
                (mass.ln() + theta.ln() + a * ln_k - lnw - ln_beta(a, gamma + 1.0)) / (gamma + a)
            };
            Ok(lnc)
        }
        other => Err(Error::NotApplicable(format!("{other:?} has no free normalization constant"))),
    }
}

/// `C` from adaptive quadrature of the unit-constant profile and the scaling in `C`.
pub fn normalization_constant_quadrature(kind: SolutionKind, spec: &EquationSpec, mass: f64) -> Result<f64> {
    check_kind(kind, spec)?;
    let nf = spec.n as f64;
    match kind {
        SolutionKind::Gaussian => Ok(mass / shape_mass(&Shape::Gauss { amp: 1.0 }, spec.n, 1.0)?),
        SolutionKind::FracKernelHalf => {
            let j = shape_mass(&Shape::Decay { amp: 1.0, c: 1.0, k: 1.0, theta: 2.0, gamma: 0.5 * (nf + 1.0) }, spec.n, 1.0)?;
            Ok(mass / j)
        }
        SolutionKind::BarenblattPME | SolutionKind::BarenblattFDE | SolutionKind::BarenblattPLE | SolutionKind::DNLEProfile => {
            let beta = similarity_exponents(spec)?.beta;
            let (theta, gamma, ln_k, decays) = profile_params(kind, spec, beta)?;
            let k = ln_k.exp();
            let a = nf / theta;
            // with y = C^{1/θ} z the mass is C^{∓γ + N/θ} times the C = 1 integral
            if decays {
                let j = shape_mass(&Shape::Decay { amp: 1.0, c: 1.0, k, theta, gamma }, spec.n, 1.0)?;
                Ok((j / mass).powf(1.0 / (gamma - a)))
            } else {
                let j = shape_mass(&Shape::Compact { amp: 1.0, c: 1.0, k, theta, gamma }, spec.n, 1.0)?;
                Ok((mass / j).powf(1.0 / (gamma + a)))
            }
        }
        other => Err(Error::NotApplicable(format!("{other:?} has no free normalization constant"))),
    }
}

/// `C` solving the mass condition; both routes must agree to `1e−8` relative.
pub fn normalization_constant(kind: SolutionKind, spec: &EquationSpec, mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(range(format!("mass must be positive, got {mass}")));
    }
    let a = normalization_constant_closed(kind, spec, mass)?;
    let b = normalization_constant_quadrature(kind, spec, mass)?;
    if ((a - b) / a).abs() > 1e-8 {
        return Err(Error::Numerical(format!("normalization routes disagree: closed form {a:e}, quadrature {b:e}")));
    }
    Ok(a)
}

type RealFn = Box<dyn Fn(f64) -> f64>;

/// Builds a solution of the given kind.
///
/// `mass` is ignored by the kinds whose mass is fixed by other parameters
/// (`LogDiffExplicit`, `FracExplicitS12`, `PMEBlowupM2`).
pub fn make_solution(kind: SolutionKind, spec: &EquationSpec, mass: f64, extras: &Extras) -> Result<ClosedFormSolution> {
    check_kind(kind, spec)?;
    let needs_mass = !matches!(kind, SolutionKind::LogDiffExplicit | SolutionKind::FracExplicitS12 | SolutionKind::PMEBlowupM2);
    if needs_mass && !(mass > 0.0 && mass.is_finite()) {
        return Err(range(format!("mass must be positive, got {mass}")));
    }
    let nf = spec.n as f64;
    let t_end = || extras.t_end.ok_or_else(|| range(format!("{kind:?} needs the time T")));
    let base = |c: f64, k: f64, alpha: f64, beta: f64| ClosedFormSolution {
        spec: spec.clone(),
        kind,
        c,
        k,
        mass,
        t_end: None,
        width: None,
        alpha,
        beta,
        table: None,
    };
    Ok(match kind {
        SolutionKind::Gaussian => base(normalization_constant_closed(kind, spec, mass)?, 0.25, 0.5 * nf, 0.5),
        SolutionKind::FracKernelHalf => base(normalization_constant_closed(kind, spec, mass)?, 1.0, nf, 1.0),
        SolutionKind::BarenblattPME | SolutionKind::BarenblattFDE | SolutionKind::BarenblattPLE | SolutionKind::DNLEProfile => {
            let e = similarity_exponents(spec)?;
            let (_, _, ln_k, _) = profile_params(kind, spec, e.beta)?;
            base(normalization_constant_closed(kind, spec, mass)?, ln_k.exp(), e.alpha, e.beta)
        }
        SolutionKind::FracKernelNumeric => {
            return Err(Error::Validation("FracKernelNumeric needs a kernel table; use ClosedFormSolution::frac_kernel_numeric".into()))
        }
        SolutionKind::LogDiffExplicit => {
            let a = extras.width.ok_or_else(|| range("LogDiffExplicit needs the width a"))?;
            let t = t_end()?;
            if !(a > 0.0 && t > 0.0) {
                return Err(range("LogDiffExplicit needs a > 0 and T > 0"));
            }
            ClosedFormSolution { t_end: Some(t), width: Some(a), mass: 8.0 * PI * t, ..base(a * a, 1.0, 0.0, 0.0) }
        }
        SolutionKind::FracExplicitS12 => {
            let t = t_end()?;
            if !(t > 0.0) {
                return Err(range("FracExplicitS12 needs T > 0"));
            }
            ClosedFormSolution { t_end: Some(t), mass: 2.0 * PI * t, ..base(1.0, 1.0, 0.0, 0.0) }
        }
        SolutionKind::PMEBlowupM2 => {
            let c = extras.c.ok_or_else(|| range("PMEBlowupM2 needs the constant C"))?;
            if !(c > 0.0) {
                return Err(range("PMEBlowupM2 needs C > 0"));
            }
            let t = t_end()?;
            ClosedFormSolution { t_end: Some(t), mass: f64::INFINITY, ..base(c, 0.25 / (nf + 2.0), 0.0, 0.0) }
        }
    })
}

impl ClosedFormSolution {
    pub fn gaussian(n: usize, mass: f64) -> Result<Self> {
        make_solution(SolutionKind::Gaussian, &EquationSpec::heat(n), mass, &Extras::default())
    }

    /// Barenblatt solution of PME/FDE or PLE, picking the kind from the parameters.
    pub fn barenblatt(spec: &EquationSpec, mass: f64) -> Result<Self> {
        let kind = match spec.family {
            Family::PmeFde if spec.m()? > 1.0 => SolutionKind::BarenblattPME,
            Family::PmeFde => SolutionKind::BarenblattFDE,
            Family::Ple => SolutionKind::BarenblattPLE,
            Family::Dnle => SolutionKind::DNLEProfile,
            Family::He => SolutionKind::Gaussian,
            other => return Err(range(format!("no Barenblatt solution for {}", other.name()))),
        };
        make_solution(kind, spec, mass, &Extras::default())
    }

    pub fn log_diffusion(a: f64, t_end: f64) -> Result<Self> {
        let ex = Extras { t_end: Some(t_end), width: Some(a), c: None };
        make_solution(SolutionKind::LogDiffExplicit, &EquationSpec::log_diffusion(), 0.0, &ex)
    }

    pub fn frac_explicit_s12(t_end: f64) -> Result<Self> {
        let spec = EquationSpec { m: Some(0.0), ..EquationSpec::fpme(0.5, 0.5, 1) };
        let ex = Extras { t_end: Some(t_end), ..Extras::default() };
        make_solution(SolutionKind::FracExplicitS12, &spec, 0.0, &ex)
    }

    pub fn pme_blowup(n: usize, c: f64, t_end: f64) -> Result<Self> {
        let ex = Extras { t_end: Some(t_end), c: Some(c), width: None };
        make_solution(SolutionKind::PMEBlowupM2, &EquationSpec::pme(2.0, n), 0.0, &ex)
    }

    pub fn frac_kernel_half(n: usize, mass: f64) -> Result<Self> {
        make_solution(SolutionKind::FracKernelHalf, &EquationSpec::fhe(0.5, n), mass, &Extras::default())
    }

    /// Fractional heat kernel for general `s` from a computed kernel table.
    pub fn frac_kernel_numeric(table: Arc<KernelTable>, mass: f64) -> Result<Self> {
        let spec = EquationSpec::fhe(table.s, table.n);
        check_kind(SolutionKind::FracKernelNumeric, &spec)?;
        if !(mass > 0.0) {
            return Err(range("mass must be positive"));
        }
        let e = similarity_exponents(&spec)?;
        Ok(ClosedFormSolution {
            spec,
            kind: SolutionKind::FracKernelNumeric,
            c: 1.0,
            k: 1.0,
            mass,
            t_end: None,
            width: None,
            alpha: e.alpha,
            beta: e.beta,
            table: Some(table),
        })
    }

    fn shape(&self) -> Option<Shape> {
        let nf = self.spec.n as f64;
        Some(match self.kind {
            SolutionKind::Gaussian => Shape::Gauss { amp: self.c },
            SolutionKind::FracKernelHalf => Shape::Decay { amp: self.c, c: 1.0, k: 1.0, theta: 2.0, gamma: 0.5 * (nf + 1.0) },
            SolutionKind::LogDiffExplicit => {
                let a = self.width.unwrap_or(1.0);
                Shape::Decay { amp: 8.0 * a * a, c: a * a, k: 1.0, theta: 2.0, gamma: 2.0 }
            }
            SolutionKind::FracExplicitS12 => Shape::Decay { amp: 2.0, c: 1.0, k: 1.0, theta: 2.0, gamma: 1.0 },
            SolutionKind::BarenblattPME | SolutionKind::BarenblattFDE | SolutionKind::BarenblattPLE | SolutionKind::DNLEProfile => {
                let (theta, gamma, ln_k, decays) = profile_params(self.kind, &self.spec, self.beta).ok()?;
                let k = ln_k.exp();
                if decays {
                    Shape::Decay { amp: 1.0, c: self.c, k, theta, gamma }
                } else {
                    Shape::Compact { amp: 1.0, c: self.c, k, theta, gamma }
                }
            }
            SolutionKind::FracKernelNumeric | SolutionKind::PMEBlowupM2 => return None,
        })
    }

    fn is_source_type(&self) -> bool {
        !matches!(self.kind, SolutionKind::LogDiffExplicit | SolutionKind::FracExplicitS12 | SolutionKind::PMEBlowupM2)
    }

    /// Validity window check.
    pub fn check_time(&self, t: f64) -> Result<()> {
        let ok = match self.kind {
            SolutionKind::PMEBlowupM2 => t < self.t_end.unwrap_or(f64::INFINITY),
            SolutionKind::LogDiffExplicit | SolutionKind::FracExplicitS12 => t.is_finite(),
            _ => t > 0.0 && t.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            let window = match self.kind {
                SolutionKind::PMEBlowupM2 => format!("t < T = {}", self.t_end.unwrap_or(f64::NAN)),
                _ if self.is_source_type() => "t > 0".to_string(),
                _ => "finite t".to_string(),
            };
            Err(Error::TimeWindow { t, window })
        }
    }

    /// Value at radius `r = |x|`.
    pub fn evaluate_radial(&self, r: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let r = r.abs();
        Ok(match self.kind {
            SolutionKind::PMEBlowupM2 => {
                let tau = self.t_end.expect("blow-up has T") - t;
                let nf = self.spec.n as f64;
                self.k * r * r / tau + self.c * tau.powf(-nf / (nf + 2.0))
            }
            SolutionKind::LogDiffExplicit | SolutionKind::FracExplicitS12 => {
                let tau = (self.t_end.expect("loss kinds have T") - t).max(0.0);
                tau * self.shape().expect("shape").eval(r)
            }
            SolutionKind::FracKernelNumeric => {
                let table = self.table.as_ref().expect("numeric kernel has a table");
                self.mass * t.powf(-self.alpha) * table.eval(r * t.powf(-self.beta))
            }
            _ => t.powf(-self.alpha) * self.shape().expect("shape").eval(r * t.powf(-self.beta)),
        })
    }

    /// Value at a point `x ∈ R^N`.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.spec.n {
            return Err(Error::Validation(format!("point has {} coordinates, N = {}", x.len(), self.spec.n)));
        }
        self.evaluate_radial(x.iter().map(|v| v * v).sum::<f64>().sqrt(), t)
    }

    /// Total mass at time `t` by radial quadrature of [`Self::evaluate_radial`].
    pub fn mass_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let n = self.spec.n;
        match self.kind {
            SolutionKind::PMEBlowupM2 => Err(Error::DivergentMass("the blow-up family grows like |x|²".into())),
            SolutionKind::FracKernelNumeric => {
                let table = self.table.as_ref().expect("numeric kernel has a table");
                let l = t.powf(self.beta);
                let rmax = table.r_max * l;
                let k = n as i32 - 1;
                let f = |r: f64| self.evaluate_radial(r, t).unwrap_or(f64::NAN) * r.powi(k);
                let mut breaks = vec![0.0];
                let mut b = l / 8.0;
                while b < rmax {
                    breaks.push(b);
                    b *= 2.0;
                }
                breaks.push(rmax);
                let inner = crate::quadrature::integrate_panels(f, &breaks, 0.0, 1e-12)?.value;
                let q = n as f64 + 2.0 * self.spec.s()?;
                let amp = self.mass * t.powf(-self.alpha) * table.tail_c * l.powf(q);
                let tail = amp * rmax.powf(n as f64 - q) / (q - n as f64);
                Ok(omega(n) * (inner + tail))
            }
            SolutionKind::LogDiffExplicit | SolutionKind::FracExplicitS12 => {
                let tau = (self.t_end.expect("T") - t).max(0.0);
                Ok(tau * shape_mass(&self.shape().expect("shape"), n, 1.0)?)
            }
            _ => {
                let l = t.powf(self.beta);
                let shape = self.shape().expect("shape").stretched(l);
                Ok(t.powf(-self.alpha) * shape_mass(&shape, n, l)?)
            }
        }
    }

    pub fn mass_law(&self) -> Result<MassLaw> {
        match self.kind {
            SolutionKind::PMEBlowupM2 => Err(Error::DivergentMass("the blow-up family has infinite mass".into())),
            SolutionKind::LogDiffExplicit => Ok(MassLaw::linear_loss(self.mass, 8.0 * PI)),
            SolutionKind::FracExplicitS12 => Ok(MassLaw::linear_loss(self.mass, 2.0 * PI)),
            _ => Ok(MassLaw::constant(self.mass)),
        }
    }

    /// Characteristic length at time `t` and the support radius for compact kinds.
    fn scales(&self, t: f64) -> (f64, Option<f64>) {
        match self.kind {
            SolutionKind::LogDiffExplicit => (self.width.unwrap_or(1.0), None),
            SolutionKind::FracExplicitS12 => (1.0, None),
            SolutionKind::PMEBlowupM2 => (1.0, None),
            _ => {
                let l = t.powf(self.beta);
                let support = match self.shape() {
                    Some(Shape::Compact { c, k, theta, .. }) => Some(l * (c / k).powf(1.0 / theta)),
                    _ => None,
                };
                let l = match self.shape() {
                    Some(Shape::Decay { c, k, theta, .. }) => l * (c / k).powf(1.0 / theta),
                    Some(Shape::Compact { .. }) => support.expect("compact") ,
                    Some(Shape::Gauss { .. }) => 2.0 * l,
                    None => l,
                };
                (l, support)
            }
        }
    }

    /// Radial interval on which residuals are measured: away from the origin,
    /// from free boundaries and from the grid edge.
    pub fn residual_window(&self, t: f64) -> (f64, f64) {
        let (l, support) = self.scales(t);
        match support {
            Some(s) => (0.1 * s, 0.8 * s),
            None => (0.1 * l, 4.0 * l),
        }
    }

    /// Right-hand side `Lu` of `u_t = Lu` at radius `r`, by centred differences of step `h`.
    fn rhs(&self, r: f64, t: f64, h: f64) -> Result<f64> {
        let n = self.spec.n;
        let u = |x: f64| self.evaluate_radial(x, t);
        let kind = self.kind;
        let fractional = matches!(kind, SolutionKind::FracKernelHalf | SolutionKind::FracKernelNumeric | SolutionKind::FracExplicitS12);
        if fractional {
            if n != 1 {
                return Err(Error::NotApplicable("fractional residuals are one-dimensional".into()));
            }
            let s = self.spec.s()?;
            let y0 = 20.0 * self.scales(t).0.max(1.0);
            return if kind == SolutionKind::FracExplicitS12 {
                let tau = self.t_end.expect("T") - t;
                let f = |x: f64| (2.0 * tau / (1.0 + x * x)).ln();
                Ok(-apply_analytic(&f, r, s, h, y0)?)
            } else {
                let f = |x: f64| self.evaluate_radial(x, t).unwrap_or(f64::NAN);
                Ok(-apply_analytic(&f, r, s, h, y0)?)
            };
        }
        // potential w and flux Φ(w_r)
        let (pot, flux): (RealFn, RealFn) = match self.spec.family {
            Family::He => (Box::new(|v| v), Box::new(|g| g)),
            Family::PmeFde => {
                let m = self.spec.m()?;
                (Box::new(move |v: f64| v.powf(m)), Box::new(|g| g))
            }
            Family::LogDiff => (Box::new(|v: f64| v.ln()), Box::new(|g| g)),
            Family::Ple => {
                let p = self.spec.p()?;
                (Box::new(|v| v), Box::new(move |g: f64| g.abs().powf(p - 2.0) * g))
            }
            Family::Dnle => {
                let (m, p) = (self.spec.m()?, self.spec.p()?);
                (Box::new(move |v: f64| v.powf(m)), Box::new(move |g: f64| g.abs().powf(p - 2.0) * g))
            }
            other => return Err(Error::NotApplicable(format!("no residual for {}", other.name()))),
        };
        let k = n as i32 - 1;
        let face = |x: f64| -> Result<f64> { Ok(flux((pot(u(x + 0.5 * h)?) - pot(u(x - 0.5 * h)?)) / h)) };
        let rp = r + 0.5 * h;
        let rm = r - 0.5 * h;
        Ok((rp.powi(k) * face(rp)? - rm.powi(k) * face(rm)?) / (h * r.powi(k)))
    }

    /// `max |u_t − Lu|` over the grid centres inside [`Self::residual_window`],
    /// with both derivatives taken by centred differences of step `h`, the largest grid spacing.
    pub fn residual_norm(&self, grid: &RadialGrid, t: f64) -> Result<f64> {
        if grid.n != self.spec.n {
            return Err(Error::Validation(format!("grid N = {} but solution N = {}", grid.n, self.spec.n)));
        }
        self.check_time(t)?;
        let h = grid.max_width();
        let (lo, hi) = self.residual_window(t);
        let (l, _) = self.scales(t);
        if h > l / 20.0 * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!("spacing {h} does not resolve the profile scale {l}")));
        }
        if self.is_source_type() {
            self.check_time(t - h)?;
        }
        if let Some(te) = self.t_end {
            if t + h >= te {
                return Err(Error::TimeWindow { t: t + h, window: format!("t < T = {te}") });
            }
        }
        let pts: Vec<f64> = grid.centers().into_iter().filter(|r| *r >= lo && *r <= hi).collect();
        if pts.len() < 8 {
            return Err(Error::Resolution(format!("only {} grid points inside the residual window", pts.len())));
        }
        let mut worst: f64 = 0.0;
        for r in pts {
            let ut = (self.evaluate_radial(r, t + h)? - self.evaluate_radial(r, t - h)?) / (2.0 * h);
            let res = (ut - self.rhs(r, t, h)?).abs();
            if !res.is_finite() {
                return Err(Error::Numerical(format!("non-finite residual at r = {r}")));
            }
            worst = worst.max(res);
        }
        Ok(worst)
    }

    /// CSV rows `r,t,u` over a tensor of radii and times.
    pub fn sample_csv(&self, radii: &[f64], times: &[f64]) -> Result<String> {
        let mut out = String::from("r,t,u\n");
        for &t in times {
            for &r in radii {
                out.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", r, t, self.evaluate_radial(r, t)?));
            }
        }
        Ok(out)
    }
}

/// `(C1 − C2)(T − t)^{−N/(N+2)}`: the exact, spatially constant difference of two
/// members of the `m = 2` blow-up family.
pub fn difference_law(c1: f64, c2: f64, spec: &EquationSpec, t: f64, t_end: f64) -> Result<f64> {
    if spec.family != Family::PmeFde || spec.m != Some(2.0) {
        return Err(range("the blow-up family exists for PME with m = 2"));
    }
    if !(c1 > c2 && c2 > 0.0) {
        return Err(range("difference law needs C1 > C2 > 0"));
    }
    if t >= t_end {
        return Err(Error::TimeWindow { t, window: format!("t < T = {t_end}") });
    }
    let nf = spec.n as f64;
    Ok((c1 - c2) * (t_end - t).powf(-nf / (nf + 2.0)))
}

/// `L^q` blow-up exponent `μ = Nβ(q−1)/q` of `‖U_1 − U_2‖_q ~ (T−t)^{−μ}`-type
/// estimates for the PME with `m > 2`, valid for `q > q* = N(m−1)/(2(m−2))`.
pub fn lp_blowup_exponent(m: f64, n: usize, q: f64) -> Result<f64> {
    if !(m > 2.0) {
        return Err(range("the L^p blow-up estimate needs m > 2"));
    }
    let nf = n as f64;
    let q_star = nf * (m - 1.0) / (2.0 * (m - 2.0));
    if !(q > q_star) {
        return Err(range(format!("q = {q} must exceed q* = {q_star}")));
    }
    let beta = similarity_exponents(&EquationSpec::pme(m, n))?.beta;
    Ok(nf * beta * (q - 1.0) / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_peak() {
        let g = ClosedFormSolution::gaussian(1, 1.0).unwrap();
        assert_relative_eq!(g.evaluate(&[0.0], 1.0).unwrap(), (4.0 * PI).powf(-0.5), max_relative = 1e-14);
        assert_relative_eq!(g.evaluate(&[0.0], 0.25 / PI).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn poisson_kernel_closed_form() {
        let u = ClosedFormSolution::frac_kernel_half(1, 1.0).unwrap();
        assert_relative_eq!(u.c, 1.0 / PI, max_relative = 1e-14);
        for (x, t) in [(0.3, 0.5), (2.0, 1.7)] {
            assert_relative_eq!(u.evaluate(&[x], t).unwrap(), t / (PI * (x * x + t * t)), max_relative = 1e-13);
        }
    }

    #[test]
    fn explicit_s12_value() {
        let u = ClosedFormSolution::frac_explicit_s12(2.0).unwrap();
        assert_relative_eq!(u.evaluate(&[1.0], 1.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn pme_support_edge() {
        let spec = EquationSpec::pme(2.0, 1);
        let u = ClosedFormSolution::barenblatt(&spec, 1.0).unwrap();
        assert_relative_eq!(u.k, 1.0 / 12.0, max_relative = 1e-14);
        let edge = (u.c / u.k).sqrt();
        assert_eq!(u.evaluate(&[edge], 1.0).unwrap(), 0.0);
        assert!(u.evaluate(&[0.99 * edge], 1.0).unwrap() > 0.0);
    }

    #[test]
    fn time_window() {
        let g = ClosedFormSolution::gaussian(2, 1.0).unwrap();
        assert!(matches!(g.evaluate(&[0.0, 0.0], 0.0), Err(Error::TimeWindow { .. })));
        let b = ClosedFormSolution::pme_blowup(1, 1.0, 1.0).unwrap();
        assert!(matches!(b.evaluate(&[0.0], 1.0), Err(Error::TimeWindow { .. })));
    }

    #[test]
    fn range_errors() {
        assert!(matches!(
            ClosedFormSolution::barenblatt(&EquationSpec::pme(0.2, 3), 1.0),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            make_solution(SolutionKind::BarenblattPME, &EquationSpec::pme(0.5, 3), 1.0, &Extras::default()),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn difference_law_examples() {
        let s1 = EquationSpec::pme(2.0, 1);
        assert_relative_eq!(difference_law(2.0, 1.0, &s1, 0.0, 1.0).unwrap(), 1.0);
        let s2 = EquationSpec::pme(2.0, 2);
        assert_relative_eq!(difference_law(2.0, 1.0, &s2, 1.0 - 1.0 / 16.0, 1.0).unwrap(), 4.0, max_relative = 1e-14);
        assert!(difference_law(2.0, 1.0, &s2, 1.0, 1.0).is_err());
    }
}
