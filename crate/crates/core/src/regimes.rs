//! Exponent algebra: critical exponents, self-similarity exponents and
//! regime classification for every equation family.
//!
//! Equations, with `u ≥ 0` on `R^N`:
//!
//! | family    | equation                               |
//! |-----------|----------------------------------------|
//! | HE        | `u_t = Δu`                             |
//! | PME_FDE   | `u_t = Δ(u^m)`                         |
//! | PLE       | `u_t = div(|∇u|^{p-2}∇u)`              |
//! | FHE       | `u_t + (-Δ)^s u = 0`                   |
//! | FPME      | `u_t + (-Δ)^s (u^m) = 0`               |
//! | FPLE      | nonlocal p-Laplacian of order `s`      |
//! | LOGDIFF   | `u_t = Δ log u`, `N = 2`               |
//! | TVF       | `u_t = (u_x/|u_x|)_x`, `N = 1`          |
//! | DNLE      | `u_t = Δ_p(u^m)`                       |
//! | ANISO_PME | `u_t = Σ_i ∂_i²(u^{m_i})`              |
//! | ANISO_PLE | `u_t = Σ_i ∂_i(|∂_i u|^{p_i-2} ∂_i u)` |
//!
//! ## Anisotropic p-Laplacian exponents
//!
//! Substituting `u = t^{-α} F(x_1 t^{-σ_1 α}, …)` into the anisotropic PLE and
//! matching powers of `t` in every term gives `α(p_i − 2) + p_i σ_i α = 1`,
//! and mass conservation gives `Σ σ_i = 1`. Writing `σ_i = (1/α + 2)/p_i − 1`
//! and summing, with `1/p̄ = (1/N) Σ 1/p_i`,
//!
//! `α = N / (N(p̄ − 2) + p̄)`,  `σ_i = p̄ (N + 1) / (N p_i) − 1`.
//!
//! The isotropic case `p_i = p` gives `σ_i = 1/N`, so `σ_i α = β` as in the PLE.
//! Positivity of `α` is exactly `p̄ > 2N/(N+1)`, i.e. `Σ 1/p_i < (N+1)/2`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Equation family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    He,
    PmeFde,
    Ple,
    Fhe,
    Fpme,
    Fple,
    #[serde(rename = "LOGDIFF")]
    LogDiff,
    Tvf,
    Dnle,
    AnisoPme,
    AnisoPle,
}

impl Family {
    pub fn is_fractional(self) -> bool {
        matches!(self, Family::Fhe | Family::Fpme | Family::Fple)
    }

    pub fn needs_m(self) -> bool {
        matches!(self, Family::PmeFde | Family::Fpme | Family::Dnle)
    }

    pub fn needs_p(self) -> bool {
        matches!(self, Family::Ple | Family::Fple | Family::Dnle)
    }

    pub fn is_anisotropic(self) -> bool {
        matches!(self, Family::AnisoPme | Family::AnisoPle)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::He => "HE",
            Family::PmeFde => "PME_FDE",
            Family::Ple => "PLE",
            Family::Fhe => "FHE",
            Family::Fpme => "FPME",
            Family::Fple => "FPLE",
            Family::LogDiff => "LOGDIFF",
            Family::Tvf => "TVF",
            Family::Dnle => "DNLE",
            Family::AnisoPme => "ANISO_PME",
            Family::AnisoPle => "ANISO_PLE",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "he" | "heat" => Family::He,
            "pme" | "fde" | "pme_fde" => Family::PmeFde,
            "ple" => Family::Ple,
            "fhe" => Family::Fhe,
            "fpme" => Family::Fpme,
            "fple" => Family::Fple,
            "logdiff" | "log" => Family::LogDiff,
            "tvf" => Family::Tvf,
            "dnle" => Family::Dnle,
            "aniso_pme" => Family::AnisoPme,
            "aniso_ple" => Family::AnisoPle,
            other => return Err(Error::Validation(format!("unknown family '{other}'"))),
        })
    }
}

/// One PDE instance: family plus parameters.
///
/// LOGDIFF is stored with `m = 0`, `N = 2` and TVF with `p = 1`, `N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exps: Option<Vec<f64>>,
}

impl EquationSpec {
    fn raw(family: Family, n: usize) -> Self {
        EquationSpec { family, m: None, p: None, s: None, n, exps: None }
    }

    pub fn heat(n: usize) -> Self {
        Self::raw(Family::He, n)
    }

    pub fn pme(m: f64, n: usize) -> Self {
        EquationSpec { m: Some(m), ..Self::raw(Family::PmeFde, n) }
    }

    pub fn ple(p: f64, n: usize) -> Self {
        EquationSpec { p: Some(p), ..Self::raw(Family::Ple, n) }
    }

    pub fn fhe(s: f64, n: usize) -> Self {
        EquationSpec { s: Some(s), ..Self::raw(Family::Fhe, n) }
    }

    pub fn fpme(m: f64, s: f64, n: usize) -> Self {
        EquationSpec { m: Some(m), s: Some(s), ..Self::raw(Family::Fpme, n) }
    }

    pub fn fple(p: f64, s: f64, n: usize) -> Self {
        EquationSpec { p: Some(p), s: Some(s), ..Self::raw(Family::Fple, n) }
    }

    pub fn log_diffusion() -> Self {
        EquationSpec { m: Some(0.0), ..Self::raw(Family::LogDiff, 2) }
    }

    pub fn tvf() -> Self {
        EquationSpec { p: Some(1.0), ..Self::raw(Family::Tvf, 1) }
    }

    pub fn dnle(m: f64, p: f64, n: usize) -> Self {
        EquationSpec { m: Some(m), p: Some(p), ..Self::raw(Family::Dnle, n) }
    }

    pub fn aniso_pme(exps: Vec<f64>) -> Self {
        EquationSpec { exps: Some(exps.clone()), ..Self::raw(Family::AnisoPme, exps.len()) }
    }

    pub fn aniso_ple(exps: Vec<f64>) -> Self {
        EquationSpec { exps: Some(exps.clone()), ..Self::raw(Family::AnisoPle, exps.len()) }
    }

    pub fn m(&self) -> Result<f64> {
        self.m.ok_or_else(|| Error::Validation(format!("{} spec has no m", self.family.name())))
    }

    pub fn p(&self) -> Result<f64> {
        self.p.ok_or_else(|| Error::Validation(format!("{} spec has no p", self.family.name())))
    }

    pub fn s(&self) -> Result<f64> {
        self.s.ok_or_else(|| Error::Validation(format!("{} spec has no s", self.family.name())))
    }

    /// Checks that exactly the parameters the family needs are present and in range.
    pub fn validate(&self) -> Result<()> {
        let f = self.family;
        let bad = |msg: String| Err(Error::Validation(format!("{}: {msg}", f.name())));
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        match f {
            Family::LogDiff => {
                if self.n != 2 || self.m != Some(0.0) || self.p.is_some() || self.s.is_some() {
                    return bad("LOGDIFF is fixed to m = 0, N = 2".into());
                }
                return Ok(());
            }
            Family::Tvf => {
                if self.n != 1 || self.p != Some(1.0) || self.m.is_some() || self.s.is_some() {
                    return bad("TVF is fixed to p = 1, N = 1".into());
                }
                return Ok(());
            }
            _ => {}
        }
        match (f.needs_m(), self.m) {
            (true, None) => return bad("m is required".into()),
            (false, Some(_)) => return bad("m is not a parameter of this family".into()),
            // FPME with m = 0 stands for the logarithmic nonlinearity log u
            (true, Some(m)) if f == Family::Fpme && m == 0.0 => {}
            (true, Some(m)) if !(m > 0.0 && m.is_finite()) => return bad(format!("m = {m} must be > 0")),
            _ => {}
        }
        match (f.needs_p(), self.p) {
            (true, None) => return bad("p is required".into()),
            (false, Some(_)) => return bad("p is not a parameter of this family".into()),
            (true, Some(p)) if !(p > 1.0 && p.is_finite()) => return bad(format!("p = {p} must be > 1")),
            _ => {}
        }
        match (f.is_fractional(), self.s) {
            (true, None) => return bad("s is required".into()),
            (false, Some(_)) => return bad("s is only defined for fractional families".into()),
            (true, Some(s)) if !(s > 0.0 && s < 1.0) => return bad(format!("s = {s} must lie in (0, 1)")),
            _ => {}
        }
        match (f.is_anisotropic(), &self.exps) {
            (true, None) => return bad("exps is required".into()),
            (false, Some(_)) => return bad("exps is only defined for anisotropic families".into()),
            (true, Some(e)) if e.len() != self.n => {
                return bad(format!("exps has length {} but N = {}", e.len(), self.n))
            }
            (true, Some(e)) if e.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
                return bad("exps must be positive and finite".into())
            }
            _ => {}
        }
        Ok(())
    }
}

/// Self-similarity exponents `u = t^{-α} F(x t^{-β})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityExponents {
    pub alpha: f64,
    pub beta: f64,
    /// Per-axis spreading exponents; axis `i` scales as `t^{σ_i α}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

impl SimilarityExponents {
    fn isotropic(alpha: f64, beta: f64) -> Self {
        SimilarityExponents { alpha, beta, sigmas: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Slow,
    Linear,
    GoodFast,
    Critical,
    VeryFast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// `None` for families without a critical exponent (HE, FHE).
    pub critical_value: Option<f64>,
    pub exponents: Option<SimilarityExponents>,
    pub conserves_mass: bool,
    /// Caveats attached to the verdict, e.g. open problems or singular families.
    pub remark: Option<&'static str>,
}

/// Critical exponent of `family` in dimension `n`.
///
/// For PME_FDE and FPME this is a threshold on `m`, for PLE and FPLE on `p`,
/// and for the anisotropic families on `m̄` and `p̄`.
pub fn critical_exponent(family: Family, n: usize, s: Option<f64>) -> Result<f64> {
    if n == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    let nf = n as f64;
    let frac_s = || -> Result<f64> {
        match s {
            Some(s) if s > 0.0 && s < 1.0 => Ok(s),
            Some(s) => Err(Error::Validation(format!("s = {s} must lie in (0, 1)"))),
            None => Err(Error::Validation(format!("{} requires s", family.name()))),
        }
    };
    if !family.is_fractional() && s.is_some() {
        return Err(Error::Validation(format!("s is not a parameter of {}", family.name())));
    }
    match family {
        Family::PmeFde | Family::AnisoPme => Ok((nf - 2.0) / nf),
        Family::Ple | Family::AnisoPle => Ok(2.0 * nf / (nf + 1.0)),
        Family::Fpme => Ok((nf - 2.0 * frac_s()?) / nf),
        Family::Fple => Ok(2.0 * nf / (nf + frac_s()?)),
        Family::He | Family::LogDiff | Family::Tvf | Family::Fhe | Family::Dnle => Err(Error::NotApplicable(
            format!("{} has no single critical exponent", family.name()),
        )),
    }
}

fn no_ss(spec: &EquationSpec, what: String) -> Error {
    Error::NoFiniteMassSelfSimilar(format!("{}: {what}", spec.family.name()))
}

/// Self-similarity exponents of the fundamental solution.
pub fn similarity_exponents(spec: &EquationSpec) -> Result<SimilarityExponents> {
    spec.validate()?;
    let nf = spec.n as f64;
    let from_denominator = |d: f64, label: &str| -> Result<SimilarityExponents> {
        if d > 0.0 {
            Ok(SimilarityExponents::isotropic(nf / d, 1.0 / d))
        } else {
            Err(no_ss(spec, format!("{label} = {d} is not positive")))
        }
    };
    match spec.family {
        Family::He => Ok(SimilarityExponents::isotropic(nf / 2.0, 0.5)),
        Family::Fhe => {
            let s = spec.s()?;
            Ok(SimilarityExponents::isotropic(nf / (2.0 * s), 1.0 / (2.0 * s)))
        }
        Family::PmeFde => from_denominator(nf * (spec.m()? - 1.0) + 2.0, "N(m-1)+2"),
        Family::Ple => {
            let p = spec.p()?;
            from_denominator(nf * (p - 2.0) + p, "N(p-2)+p")
        }
        Family::Fpme => from_denominator(nf * (spec.m()? - 1.0) + 2.0 * spec.s()?, "N(m-1)+2s"),
        Family::Fple => {
            let p = spec.p()?;
            from_denominator(nf * (p - 2.0) + spec.s()? * p, "N(p-2)+sp")
        }
        Family::Dnle => dnle_exponents(spec.m()?, spec.p()?, spec.n),
        Family::LogDiff => Err(no_ss(spec, "logarithmic diffusion sits at m = m_c = 0".into())),
        Family::Tvf => Err(no_ss(spec, "total variation flow sits at p = p_c = 1".into())),
        Family::AnisoPme => anisotropic_exponents(AnisoKind::Pme, spec.exps.as_deref().unwrap_or(&[]), spec.n),
        Family::AnisoPle => anisotropic_exponents(AnisoKind::Ple, spec.exps.as_deref().unwrap_or(&[]), spec.n),
    }
}

/// Exponents of the doubly nonlinear equation `u_t = Δ_p(u^m)`.
pub fn dnle_exponents(m: f64, p: f64, n: usize) -> Result<SimilarityExponents> {
    if !(m > 0.0 && p > 1.0 && n >= 1) {
        return Err(Error::Validation(format!("need m > 0, p > 1, N ≥ 1 (got m={m}, p={p}, N={n})")));
    }
    let nf = n as f64;
    let d = m * (p - 1.0) - 1.0 + p / nf;
    if d <= 0.0 {
        return Err(Error::NoFiniteMassSelfSimilar(format!(
            "DNLE: m(p-1) + p/N = {} is not above 1",
            d + 1.0
        )));
    }
    let alpha = 1.0 / d;
    Ok(SimilarityExponents::isotropic(alpha, alpha / nf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnisoKind {
    Pme,
    Ple,
}

fn precondition(condition: &str, detail: String) -> Error {
    Error::PreconditionFailed { condition: condition.into(), detail }
}

/// Exponents of the anisotropic fast diffusion equations.
///
/// PME kind: `α = N/(N(m̄−1)+2)`, `σ_i = 1/N + (m̄ − m_i)/2`.
/// PLE kind: see the module documentation.
pub fn anisotropic_exponents(kind: AnisoKind, exps: &[f64], n: usize) -> Result<SimilarityExponents> {
    if exps.len() != n || n == 0 {
        return Err(Error::Validation(format!("expected {n} exponents, got {}", exps.len())));
    }
    let nf = n as f64;
    match kind {
        AnisoKind::Pme => {
            if let Some(m) = exps.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
                return Err(precondition("H1", format!("m_i = {m} is not in (0, 1)")));
            }
            let mbar = exps.iter().sum::<f64>() / nf;
            if mbar <= (nf - 2.0) / nf {
                return Err(precondition("H2", format!("mean m = {mbar} is not above (N-2)/N")));
            }
            let alpha = nf / (nf * (mbar - 1.0) + 2.0);
            let sigmas: Vec<f64> = exps.iter().map(|m| 1.0 / nf + (mbar - m) / 2.0).collect();
            Ok(SimilarityExponents { alpha, beta: alpha / nf, sigmas: Some(sigmas) })
        }
        AnisoKind::Ple => {
            if let Some(p) = exps.iter().find(|p| !(**p > 1.0 && **p < 2.0)) {
                return Err(precondition("H1p", format!("p_i = {p} is not in (1, 2)")));
            }
            let inv_sum: f64 = exps.iter().map(|p| 1.0 / p).sum();
            if inv_sum >= (nf + 1.0) / 2.0 {
                return Err(precondition("H2p", format!("sum 1/p_i = {inv_sum} is not below (N+1)/2")));
            }
            let pbar = nf / inv_sum;
            let alpha = nf / (nf * (pbar - 2.0) + pbar);
            let sigmas: Vec<f64> = exps.iter().map(|p| pbar * (nf + 1.0) / (nf * p) - 1.0).collect();
            Ok(SimilarityExponents { alpha, beta: alpha / nf, sigmas: Some(sigmas) })
        }
    }
}

/// Places `x` relative to the critical value `xc` and the linear value `xl`.
fn by_threshold(x: f64, xc: f64, xl: f64) -> Regime {
    if x > xl {
        Regime::Slow
    } else if x == xl {
        Regime::Linear
    } else if x > xc {
        Regime::GoodFast
    } else if x == xc {
        Regime::Critical
    } else {
        Regime::VeryFast
    }
}

/// Regime classification with the mass-conservation verdict.
pub fn classify(spec: &EquationSpec) -> Result<RegimeReport> {
    spec.validate()?;
    let n = spec.n;
    let nf = n as f64;
    let (regime, critical_value, remark) = match spec.family {
        Family::He | Family::Fhe => (Regime::Linear, None, None),
        Family::PmeFde => {
            let mc = critical_exponent(spec.family, n, None)?;
            (by_threshold(spec.m()?, mc, 1.0), Some(mc), None)
        }
        Family::Ple => {
            let pc = critical_exponent(spec.family, n, None)?;
            (by_threshold(spec.p()?, pc, 2.0), Some(pc), None)
        }
        Family::Fpme => {
            let mc = critical_exponent(spec.family, n, spec.s)?;
            let m = spec.m()?;
            let remark = (m == 0.0).then_some("logarithmic nonlinearity; solutions lose mass");
            (by_threshold(m, mc, 1.0), Some(mc), remark)
        }
        Family::Fple => {
            let s = spec.s()?;
            let pc = critical_exponent(spec.family, n, Some(s))?;
            let r = by_threshold(spec.p()?, pc, 2.0);
            let remark = (r == Regime::Critical && s * pc >= 1.0)
                .then_some("conservation at p = p_c is only established when s·p_c < 1");
            (r, Some(pc), remark)
        }
        Family::LogDiff => (Regime::Critical, Some(0.0), Some("singular critical family; solutions lose mass")),
        Family::Tvf => (Regime::Critical, Some(1.0), Some("singular critical family; mass decays as M - 2t")),
        Family::Dnle => {
            // Critical line m(p-1) + p/N = 1; the linear-like line is m(p-1) = 1.
            let (m, p) = (spec.m()?, spec.p()?);
            let x = m * (p - 1.0) + p / nf;
            let xl = 1.0 + p / nf;
            let r = by_threshold(x, 1.0, xl);
            let remark = (r == Regime::Critical).then_some("conservation on the critical line is by analogy with PME/PLE");
            (r, None, remark)
        }
        Family::AnisoPme => {
            let exps = spec.exps.as_deref().unwrap_or(&[]);
            if let Some(m) = exps.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
                return Err(precondition("H1", format!("m_i = {m} is not in (0, 1)")));
            }
            let mc = critical_exponent(spec.family, n, None)?;
            let mbar = exps.iter().sum::<f64>() / nf;
            (by_threshold(mbar, mc, 1.0), Some(mc), None)
        }
        Family::AnisoPle => {
            let exps = spec.exps.as_deref().unwrap_or(&[]);
            if let Some(p) = exps.iter().find(|p| !(**p > 1.0 && **p < 2.0)) {
                return Err(precondition("H1p", format!("p_i = {p} is not in (1, 2)")));
            }
            let pc = critical_exponent(spec.family, n, None)?;
            let pbar = nf / exps.iter().map(|p| 1.0 / p).sum::<f64>();
            (by_threshold(pbar, pc, 2.0), Some(pc), None)
        }
    };
    let exponents = match regime {
        Regime::Slow | Regime::Linear | Regime::GoodFast => Some(similarity_exponents(spec)?),
        Regime::Critical | Regime::VeryFast => None,
    };
    let conserves_mass = match spec.family {
        Family::LogDiff | Family::Tvf => false,
        Family::Fpme if spec.m == Some(0.0) => false,
        Family::Fple => match regime {
            Regime::VeryFast => false,
            Regime::Critical => remark.is_none(),
            _ => true,
        },
        _ => regime != Regime::VeryFast,
    };
    Ok(RegimeReport { regime, critical_value, exponents, conserves_mass, remark })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn critical_examples() {
        assert_relative_eq!(critical_exponent(Family::PmeFde, 3, None).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(critical_exponent(Family::Ple, 2, None).unwrap(), 4.0 / 3.0);
        assert_eq!(critical_exponent(Family::Fpme, 1, Some(0.5)).unwrap(), 0.0);
        assert!(matches!(critical_exponent(Family::He, 2, None), Err(Error::NotApplicable(_))));
        assert!(critical_exponent(Family::Fpme, 1, None).is_err());
    }

    #[test]
    fn similarity_examples() {
        let e = similarity_exponents(&EquationSpec::heat(2)).unwrap();
        assert_eq!((e.alpha, e.beta), (1.0, 0.5));
        let e = similarity_exponents(&EquationSpec::pme(2.0, 1)).unwrap();
        assert_relative_eq!(e.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(e.beta, 1.0 / 3.0, epsilon = 1e-15);
        let mc = critical_exponent(Family::PmeFde, 3, None).unwrap();
        assert!(matches!(
            similarity_exponents(&EquationSpec::pme(mc, 3)),
            Err(Error::NoFiniteMassSelfSimilar(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let r = classify(&EquationSpec::pme(0.75, 3)).unwrap();
        assert_eq!(r.regime, Regime::GoodFast);
        assert!(r.conserves_mass);
        let pc = critical_exponent(Family::Ple, 2, None).unwrap();
        let r = classify(&EquationSpec::ple(pc, 2)).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        assert!(r.conserves_mass && r.exponents.is_none());
        let r = classify(&EquationSpec::pme(0.2, 3)).unwrap();
        assert_eq!(r.regime, Regime::VeryFast);
        assert!(!r.conserves_mass);
        let r = classify(&EquationSpec::pme(0.5, 1)).unwrap();
        assert_eq!(r.regime, Regime::GoodFast);
        let r = classify(&EquationSpec::log_diffusion()).unwrap();
        assert_eq!((r.regime, r.conserves_mass), (Regime::Critical, false));
    }

    #[test]
    fn dnle_examples() {
        let e = dnle_exponents(1.0, 2.0, 3).unwrap();
        assert_relative_eq!(e.alpha, 1.5, epsilon = 1e-15);
        assert_relative_eq!(e.beta, 0.5, epsilon = 1e-15);
        let e = dnle_exponents(2.0, 2.0, 1).unwrap();
        assert_relative_eq!(e.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(dnle_exponents(0.5, 1.5, 4), Err(Error::NoFiniteMassSelfSimilar(_))));
    }

    #[test]
    fn anisotropic_examples() {
        // isotropic input gives the PME exponent 2/(2·(0.8−1)+2) = 5/4
        let e = anisotropic_exponents(AnisoKind::Pme, &[0.8, 0.8], 2).unwrap();
        assert_relative_eq!(e.alpha, 1.25, epsilon = 1e-14);
        assert_relative_eq!(e.alpha, similarity_exponents(&EquationSpec::pme(0.8, 2)).unwrap().alpha, epsilon = 1e-14);
        for s in e.sigmas.unwrap() {
            assert_relative_eq!(s, 0.5, epsilon = 1e-15);
        }
        let e = anisotropic_exponents(AnisoKind::Pme, &[0.6, 0.9, 0.9], 3).unwrap();
        assert_relative_eq!(e.alpha, 15.0 / 7.0, epsilon = 1e-13);
        let sig = e.sigmas.unwrap();
        assert_relative_eq!(sig[0], 1.0 / 3.0 + 0.1, epsilon = 1e-14);
        assert_relative_eq!(sig[1], 1.0 / 3.0 - 0.05, epsilon = 1e-14);
        match anisotropic_exponents(AnisoKind::Pme, &[0.2, 0.2, 0.2], 3) {
            Err(Error::PreconditionFailed { condition, .. }) => assert_eq!(condition, "H2"),
            other => panic!("unexpected {other:?}"),
        }
        match anisotropic_exponents(AnisoKind::Ple, &[1.5, 2.5], 2) {
            Err(Error::PreconditionFailed { condition, .. }) => assert_eq!(condition, "H1p"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn aniso_ple_isotropic_matches_ple() {
        let p = 1.7;
        let e = anisotropic_exponents(AnisoKind::Ple, &[p; 3], 3).unwrap();
        let iso = similarity_exponents(&EquationSpec::ple(p, 3)).unwrap();
        assert_relative_eq!(e.alpha, iso.alpha, max_relative = 1e-14);
        for s in e.sigmas.unwrap() {
            assert_relative_eq!(s * e.alpha, iso.beta, max_relative = 1e-13);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(EquationSpec { s: Some(0.5), ..EquationSpec::pme(2.0, 1) }.validate().is_err());
        assert!(EquationSpec { m: None, ..EquationSpec::pme(2.0, 1) }.validate().is_err());
        assert!(EquationSpec { n: 3, ..EquationSpec::log_diffusion() }.validate().is_err());
        assert!(EquationSpec::fpme(0.5, 1.2, 1).validate().is_err());
        assert!(EquationSpec::tvf().validate().is_ok());
    }
}
