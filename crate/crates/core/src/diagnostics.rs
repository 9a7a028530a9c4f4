//! Post-processing: least-squares rate fits, distances to exact solutions,
//! tail exponents and relative-mass series.
//!
//! Fit windows are always supplied by the caller.

use crate::closed_forms::ClosedFormSolution;
use crate::error::{validation, Error, Result};
use crate::fractional::FracGrid;
use crate::grid::{Field, RadialGrid};
use crate::grid_solver::{MassLedger, RunRecord};
use crate::quadrature::gauss_legendre;
use crate::special::omega;
use serde::{Deserialize, Serialize};

/// Ordinary least squares `y ≈ slope·x + intercept`; returns `(slope, intercept, r²)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(validation("least squares needs two or more paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) || !sxx.is_finite() || !syy.is_finite() {
        return Err(validation("abscissae must be finite and not all equal"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((slope, my - slope * mx, r2))
}

/// A windowed least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

fn fit_window(x: &[f64], y: &[f64], window: (f64, f64), min_samples: usize) -> Result<RateFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, _)| **a >= window.0 && **a <= window.1)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if xs.len() < min_samples {
        return Err(validation(format!(
            "window [{}, {}] holds {} samples, need {min_samples}",
            window.0,
            window.1,
            xs.len()
        )));
    }
    let (slope, intercept, r2) = ols(&xs, &ys)?;
    Ok(RateFit { slope, intercept, r2, window })
}

/// `∫_{B_R} |f − ref(·, t)|` with an 8-point Gauss rule per cell.
pub fn l1_distance(f: &Field, grid: &RadialGrid, reference: &ClosedFormSolution, t: f64) -> Result<f64> {
    if f.values.len() != grid.cells() {
        return Err(validation("field does not match the grid"));
    }
    if reference.spec.n != grid.n {
        return Err(validation("reference and grid dimensions differ"));
    }
    let (x, w) = gauss_legendre(8);
    let k = grid.n as i32 - 1;
    let mut total = 0.0;
    for (i, face) in grid.r_faces.windows(2).enumerate() {
        let (a, b) = (face[0], face[1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            let r = a + half * (xi + 1.0);
            total += wi * half * (f.values[i] - reference.evaluate_radial(r, t)?).abs() * r.powi(k);
        }
    }
    Ok(omega(grid.n) * total)
}

/// `∫ |f − g|` for two fields on the same radial grid.
pub fn l1_between(f: &Field, g: &Field, grid: &RadialGrid) -> Result<f64> {
    if f.values.len() != grid.cells() || g.values.len() != grid.cells() {
        return Err(validation("fields do not match the grid"));
    }
    Ok(f.values.iter().zip(&g.values).zip(grid.volumes()).map(|((a, b), v)| (a - b).abs() * v).sum())
}

/// `h^N Σ |u_j − ref(x_j, t)|` on a uniform fractional grid.
pub fn frac_l1_distance(values: &[f64], grid: &FracGrid, reference: &ClosedFormSolution, t: f64) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(validation("values do not match the grid"));
    }
    let mut total = 0.0;
    for (v, x) in values.iter().zip(grid.points()) {
        total += (v - reference.evaluate(&x, t)?).abs();
    }
    Ok(total * grid.cell_volume())
}

/// Least-squares slope of mass against time over `window`; at least 10 samples.
pub fn loss_rate(ledger: &MassLedger, window: (f64, f64)) -> Result<RateFit> {
    fit_window(&ledger.times, &ledger.masses, window, 10)
}

/// Slope of `log u` against `log r` over `fit_range`.
///
/// The fit is also done on the lower and upper halves of the range in `log r`;
/// if the two slopes differ by more than 30 % the data do not decay like a power
/// (an exponential tail steepens with `r`) and the fit is rejected.
pub fn tail_exponent(r: &[f64], u: &[f64], fit_range: (f64, f64)) -> Result<RateFit> {
    if r.len() != u.len() {
        return Err(validation("radii and values differ in length"));
    }
    let (lo, hi) = fit_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(validation("fit range must satisfy 0 < lo < hi"));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (x, v) in r.iter().zip(u) {
        if *x >= lo && *x <= hi {
            if !(*v > 0.0) {
                return Err(validation(format!("nonpositive value {v} at r = {x} inside the fit range")));
            }
            lx.push(x.ln());
            ly.push(v.ln());
        }
    }
    let fit = fit_window(&lx, &ly, (lo.ln(), hi.ln()), 4)?;
    let mid = 0.5 * (lo.ln() + hi.ln());
    let lower = fit_window(&lx, &ly, (lo.ln(), mid), 2)?;
    let upper = fit_window(&lx, &ly, (mid, hi.ln()), 2)?;
    let spread = (upper.slope - lower.slope).abs();
    if spread > 0.3 * fit.slope.abs().max(1e-12) {
        return Err(validation(format!(
            "no power tail: local slopes {:.3} and {:.3} over the two halves of the range",
            lower.slope, upper.slope
        )));
    }
    Ok(RateFit { window: fit_range, ..fit })
}

/// [`tail_exponent`] of a radial field at the cell centres.
pub fn field_tail_exponent(f: &Field, grid: &RadialGrid, fit_range: (f64, f64)) -> Result<RateFit> {
    tail_exponent(&grid.centers(), &f.values, fit_range)
}

/// Relative mass `∫(u − v)` of two runs sharing spec, grid and time levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeMass {
    /// Entrywise difference of the two ledgers.
    pub ledger: MassLedger,
    /// Checkpoint times, for the localized quantities below.
    pub checkpoint_times: Vec<f64>,
    /// Localized relative mass `Y(t) = ∫ (u − v) ψ_ρ` with `ψ_ρ = (1 − r/ρ)_+`.
    pub localized: Vec<f64>,
    /// Herrero–Pierre quotients `|Y(t)^{1−m} − Y(τ)^{1−m}| / |t − τ|` of consecutive
    /// checkpoints; present for fast diffusion only.
    pub herrero_pierre: Option<Vec<f64>>,
}

/// Time series of `∫(u − v)` for two runs with identical spec, grid and time levels.
pub fn relative_mass_series(a: &RunRecord, b: &RunRecord, cutoff_radius: f64) -> Result<RelativeMass> {
    if a.spec != b.spec || a.grid != b.grid || a.config != b.config {
        return Err(validation("runs differ in spec, grid or config"));
    }
    if a.ledger.times != b.ledger.times {
        return Err(validation("runs accepted different time levels"));
    }
    let d = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
    let (la, lb) = (&a.ledger, &b.ledger);
    let ledger = MassLedger {
        times: la.times.clone(),
        masses: d(&la.masses, &lb.masses),
        boundary_outflux: d(&la.boundary_outflux, &lb.boundary_outflux),
        sup_u: d(&la.sup_u, &lb.sup_u),
        clipped_mass: d(&la.clipped_mass, &lb.clipped_mass),
        l1_to_reference: vec![f64::NAN; la.len()],
    };
    let vols = a.grid.volumes();
    let centers = a.grid.centers();
    let localized: Vec<f64> = a
        .checkpoints
        .iter()
        .zip(&b.checkpoints)
        .map(|(u, v)| {
            (0..vols.len())
                .map(|i| (u.values[i] - v.values[i]) * (1.0 - centers[i] / cutoff_radius).max(0.0) * vols[i])
                .sum()
        })
        .collect();
    let checkpoint_times: Vec<f64> = a.checkpoints.iter().map(|c| c.time).collect();
    let herrero_pierre = match a.spec.m {
        Some(m) if m < 1.0 && a.spec.family == crate::regimes::Family::PmeFde => Some(
            (1..localized.len())
                .map(|i| {
                    let y = |v: f64| v.max(0.0).powf(1.0 - m);
                    (y(localized[i]) - y(localized[i - 1])).abs() / (checkpoint_times[i] - checkpoint_times[i - 1])
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(RelativeMass { ledger, checkpoint_times, localized, herrero_pierre })
}

/// Result of [`sup_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupDecay {
    /// `log(1/‖u‖_∞)` against `t^{N/(N−2)}`.
    pub power: RateFit,
    /// `log(1/‖u‖_∞)` against `log t`, the algebraic-decay alternative.
    pub algebraic: RateFit,
    /// Power abscissa fits better than the algebraic one.
    pub superlinear: bool,
}

/// Goodness-of-fit trend test for the exponential-in-`t^{N/(N−2)}` sup decay at
/// the critical fast-diffusion exponent. Rates on a truncated ball are not the
/// whole-space rates, so only the comparison of the two fits is meaningful.
pub fn sup_decay_check(record: &RunRecord, window: (f64, f64)) -> Result<SupDecay> {
    let n = record.grid.n;
    if n <= 2 {
        return Err(validation("the t^{N/(N−2)} abscissa needs N ≥ 3"));
    }
    let l = &record.ledger;
    let last = *l.times.last().ok_or_else(|| validation("empty ledger"))?;
    if last < window.1 {
        return Err(validation("run ends before the fit window"));
    }
    let q = n as f64 / (n as f64 - 2.0);
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    let mut ys = Vec::new();
    for (t, s) in l.times.iter().zip(&l.sup_u) {
        if *t >= window.0 && *t <= window.1 {
            if !(*s > 0.0) {
                return Err(validation(format!("solution extinct at t = {t}, inside the fit window")));
            }
            if *t <= 0.0 {
                return Err(validation("fit window must lie in t > 0"));
            }
            xs.push(t.powf(q));
            ls.push(t.ln());
            ys.push(-s.ln());
        }
    }
    let power = fit_window(&xs, &ys, (window.0.powf(q), window.1.powf(q)), 5)?;
    let algebraic = fit_window(&ls, &ys, (window.0.ln(), window.1.ln()), 5)?;
    Ok(SupDecay { power: RateFit { window, ..power }, algebraic: RateFit { window, ..algebraic }, superlinear: power.r2 > algebraic.r2 })
}

/// Mass lost over the run, `M(0) − M(end)`.
pub fn mass_lost(ledger: &MassLedger) -> Result<f64> {
    match (ledger.masses.first(), ledger.masses.last()) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::Validation("empty ledger".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.5 * t).collect();
        let (s, c, r2) = ols(&x, &y).unwrap();
        assert!((s + 2.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_tail() {
        let r: Vec<f64> = (1..200).map(|i| i as f64).collect();
        let u: Vec<f64> = r.iter().map(|x| x.powf(-3.7)).collect();
        let f = tail_exponent(&r, &u, (10.0, 150.0)).unwrap();
        assert!((f.slope + 3.7).abs() < 1e-10);
    }

    #[test]
    fn gaussian_tail_rejected() {
        let r: Vec<f64> = (1..400).map(|i| i as f64 * 0.02).collect();
        let u: Vec<f64> = r.iter().map(|x| (-x * x / 4.0).exp()).collect();
        assert!(tail_exponent(&r, &u, (3.0, 7.9)).is_err());
    }

    #[test]
    fn loss_rate_needs_samples() {
        let mut l = MassLedger::start(0.0, 1.0, 1.0);
        for i in 1..5 {
            l.push(i as f64, 1.0, 0.0, 1.0, 0.0);
        }
        assert!(matches!(loss_rate(&l, (0.0, 10.0)), Err(Error::Validation(_))));
    }
}
