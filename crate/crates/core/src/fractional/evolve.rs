//! Time stepping for `u_t + (−Δ)^s φ(u) = 0` with the restricted operator.
//!
//! `φ(u) = u^m` (FHE is `m = 1`); `m = 0` stands for `φ(u) = log u`.
//! For `m ≤ 1` each step is backward Euler in the potential `w = φ(u)`:
//! `(ψ(w) − u^n)/dt + A w = 0` with `ψ = φ^{−1}`. The Newton matrix
//! `diag(ψ'(w))/dt + A` is symmetric positive definite, so every linear solve is a
//! Jacobi-preconditioned conjugate gradient with FFT matrix-vector products.
//! For `m > 1` the step is explicit under `dt ≤ cfl / (λ_max(A) · m ‖u‖_∞^{m−1})`.

use super::{FracGrid, FracOperator};
use crate::error::{validation, Error, Result};
use crate::grid::Field;
use crate::grid_solver::MassLedger;
use crate::regimes::{EquationSpec, Family};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracConfig {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Mass-units tolerance on `dt·Σ|R_i|·h^N` per step.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Fraction of the explicit stability bound used when `m > 1`.
    pub cfl: f64,
    pub checkpoint_times: Vec<f64>,
}

impl Default for FracConfig {
    fn default() -> Self {
        FracConfig {
            dt: 1e-2,
            dt_min: 1e-8,
            dt_max: 5e-2,
            newton_tol: 1e-11,
            newton_max_iter: 30,
            cfl: 0.4,
            checkpoint_times: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FracRunRecord {
    pub spec: EquationSpec,
    pub grid: FracGrid,
    pub config: FracConfig,
    pub checkpoints: Vec<Field>,
    pub ledger: MassLedger,
}

#[derive(Clone, Copy)]
enum Nonlinearity {
    Power(f64),
    Log,
}

impl Nonlinearity {
    fn phi(self, u: f64) -> f64 {
        match self {
            Nonlinearity::Power(m) => u.signum() * u.abs().powf(m),
            Nonlinearity::Log => u.ln(),
        }
    }
    /// `ψ(w)` and `ψ'(w)`.
    fn psi(self, w: f64) -> (f64, f64) {
        match self {
            Nonlinearity::Power(m) => {
                let a = w.abs();
                (w.signum() * a.powf(1.0 / m), a.powf(1.0 / m - 1.0) / m)
            }
            Nonlinearity::Log => {
                let e = w.exp();
                (e, e)
            }
        }
    }
}

fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: &[f64],
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(a, p)| a / p).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Numerical("conjugate gradient lost positive definiteness".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerical(format!("conjugate gradient did not converge in {max_iter} iterations")))
}

struct Stepper<'a> {
    op: &'a FracOperator,
    nl: Nonlinearity,
    implicit: bool,
    cfg: &'a FracConfig,
    vol: f64,
}

struct StepOut {
    u: Vec<f64>,
    outflux: f64,
    clipped: f64,
}

impl Stepper<'_> {
    fn implicit_step(&self, u0: &[f64], dt: f64) -> Result<StepOut> {
        let op = self.op;
        let n = u0.len();
        let mut w: Vec<f64> = u0.iter().map(|v| self.nl.phi(*v)).collect();
        let residual = |w: &[f64]| -> Result<(Vec<f64>, f64)> {
            let aw = op.apply_values(w)?;
            let r: Vec<f64> = (0..n).map(|i| (self.nl.psi(w[i]).0 - u0[i]) / dt + aw[i]).collect();
            let norm = dt * self.vol * r.iter().map(|v| v.abs()).sum::<f64>();
            Ok((r, norm))
        };
        let (mut r, mut norm) = residual(&w)?;
        let mut iter = 0;
        while norm > self.cfg.newton_tol {
            iter += 1;
            if iter > self.cfg.newton_max_iter {
                return Err(Error::StepRejected(format!("Newton residual {norm:.3e} after {} iterations", iter - 1)));
            }
            let d: Vec<f64> = w.iter().map(|v| self.nl.psi(*v).1 / dt).collect();
            let pre: Vec<f64> = d.iter().map(|v| v + op.scale * op.diag).collect();
            let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
            let delta = conjugate_gradient(
                |x| {
                    let ax = op.apply_values(x).expect("sizes checked");
                    ax.iter().zip(x).zip(&d).map(|((a, xv), dv)| a + dv * xv).collect()
                },
                &pre,
                &minus_r,
                1e-12,
                2000,
            )?;
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = w.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
                let (rt, nt) = residual(&trial)?;
                if nt < norm || lambda < 1e-3 {
                    w = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
                lambda *= 0.5;
            }
        }
        let mut clipped = 0.0;
        let u: Vec<f64> = w
            .iter()
            .map(|v| {
                let x = self.nl.psi(*v).0;
                if x < 0.0 {
                    clipped -= x * self.vol;
                    0.0
                } else {
                    x
                }
            })
            .collect();
        // Σ(u − u0)·vol = −dt·leak + dt·vol·ΣR, and |dt·vol·ΣR| ≤ newton_tol
        Ok(StepOut { u, outflux: dt * op.exterior_rate(&w), clipped })
    }

    fn explicit_step(&self, u0: &[f64], dt: f64) -> Result<StepOut> {
        let phi: Vec<f64> = u0.iter().map(|v| self.nl.phi(*v)).collect();
        let a = self.op.apply_values(&phi)?;
        let u: Vec<f64> = u0.iter().zip(&a).map(|(u, a)| u - dt * a).collect();
        if let Some(v) = u.iter().find(|v| **v < -1e-10) {
            return Err(Error::Numerical(format!("negative overshoot {v:e} in explicit step")));
        }
        let mut clipped = 0.0;
        let u = u
            .into_iter()
            .map(|v| {
                if v < 0.0 {
                    clipped -= v * self.vol;
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Ok(StepOut { u, outflux: dt * self.op.exterior_rate(&phi), clipped })
    }

    fn stable_dt(&self, u: &[f64]) -> f64 {
        let Nonlinearity::Power(m) = self.nl else { return f64::INFINITY };
        let umax = u.iter().fold(0.0f64, |a, v| a.max(*v));
        self.cfg.cfl / (self.op.spectral_bound() * m * umax.powf(m - 1.0).max(1e-300))
    }
}

/// Integrates FHE or FPME from `data` (values on `grid`, at `data.time`) to the last checkpoint.
pub fn frac_run(spec: &EquationSpec, data: &Field, grid: FracGrid, config: &FracConfig) -> Result<FracRunRecord> {
    spec.validate()?;
    let s = spec.s()?;
    let nl = match spec.family {
        Family::Fhe => Nonlinearity::Power(1.0),
        Family::Fpme if spec.m()? == 0.0 => Nonlinearity::Log,
        Family::Fpme => Nonlinearity::Power(spec.m()?),
        _ => return Err(validation("frac_run supports FHE and FPME")),
    };
    if spec.n != grid.dim {
        return Err(validation(format!("spec N = {} but grid dimension {}", spec.n, grid.dim)));
    }
    if data.values.len() != grid.len() {
        return Err(validation("initial data does not match the grid"));
    }
    if data.values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(validation("initial data must be finite and nonnegative"));
    }
    if matches!(nl, Nonlinearity::Log) && data.values.iter().any(|v| *v <= 0.0) {
        return Err(validation("logarithmic nonlinearity needs positive data"));
    }
    if !(config.dt > 0.0 && config.dt_min > 0.0 && config.dt_min <= config.dt_max && config.newton_tol > 0.0) {
        return Err(validation("invalid time-step configuration"));
    }
    let mut times = config.checkpoint_times.clone();
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|t| *t <= data.time) {
        return Err(validation("checkpoint times must increase and follow the initial time"));
    }
    times.dedup();
    let op = FracOperator::new(s, grid)?;
    let implicit = !matches!(nl, Nonlinearity::Power(m) if m > 1.0);
    let stepper = Stepper { op: &op, nl, implicit, cfg: config, vol: grid.cell_volume() };

    let mut u = data.values.clone();
    let mut t = data.time;
    let mass = |u: &[f64]| u.iter().sum::<f64>() * grid.cell_volume();
    let mut ledger = MassLedger::start(t, mass(&u), sup(&u));
    let mut checkpoints = Vec::new();
    let mut dt = config.dt.min(config.dt_max);
    let mut outflux_cum = 0.0;
    let mut clipped_cum = 0.0;
    for &target in &times {
        while t < target - 1e-12 * target.abs().max(1.0) {
            let mut h = dt.min(target - t);
            if !stepper.implicit {
                let bound = stepper.stable_dt(&u);
                if bound < config.dt_min {
                    return Err(Error::StepRejected(format!("stability bound {bound:e} below dt_min")));
                }
                h = h.min(bound);
            }
            let out = if stepper.implicit { stepper.implicit_step(&u, h) } else { stepper.explicit_step(&u, h) };
            match out {
                Ok(o) => {
                    u = o.u;
                    t += h;
                    outflux_cum += o.outflux;
                    clipped_cum += o.clipped;
                    ledger.push(t, mass(&u), outflux_cum, sup(&u), clipped_cum);
                    if h == dt {
                        dt = (dt * 1.25).min(config.dt_max);
                    }
                }
                Err(Error::StepRejected(_)) | Err(Error::Numerical(_)) if h / 2.0 >= config.dt_min => {
                    dt = h / 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        checkpoints.push(Field::new(u.clone(), t));
    }
    Ok(FracRunRecord { spec: spec.clone(), grid, config: config.clone(), checkpoints, ledger })
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |a, v| a.max(v.abs()))
}
