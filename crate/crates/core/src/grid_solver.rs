//! Radially symmetric finite-volume solver for the local equations on a ball.
//!
//! Conservative form `u_t = r^{1−N} (r^{N−1} Φ)_r`, integrated with backward
//! Euler. Cell balance: `V_i (u_i − u_i^n)/dt = A_{i+1} Φ_{i+1} − A_i Φ_i` with
//! `A = ω_N r^{N−1}` at faces and `Φ_0 = 0` on the axis.
//!
//! | family  | flux `Φ`                                 | Newton variable        |
//! |---------|------------------------------------------|------------------------|
//! | HE      | `u_r`                                    | `u`                    |
//! | PME_FDE | `(u^m)_r`                                | `u` if `m ≥ 1`, else `w = u^m` |
//! | LOGDIFF | `(log u)_r`                              | `w = log u`            |
//! | PLE     | `(u_r² + ε²)^{(p−2)/2} u_r`              | `u`                    |
//! | TVF     | `u_r / (u_r² + ε²)^{1/2}`                | `u`                    |
//!
//! In the potential variable the Jacobian is an M-matrix for any `u ≥ 0`, so
//! the singular diffusivity `m u^{m−1}` of fast diffusion never enters it.
//! `reg_eps` is the physical regularization `ε` of the gradient-dependent fluxes
//! and only regularizes the Jacobian of the slow PME.

use crate::closed_forms::ClosedFormSolution;
use crate::error::{validation, Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::quadrature::integrate;
use crate::regimes::{EquationSpec, Family};
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// Outer boundary condition at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBc {
    /// `u(R) = 0`: mass leaving the ball is the proxy for mass escaping to infinity.
    Dirichlet0,
    /// No flux through `r = R`.
    ZeroFlux,
    /// `u(R, t)` taken from the reference closed-form solution.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Factor applied to `dt` after every accepted step (1 keeps `dt` fixed).
    #[serde(default = "default_growth")]
    pub dt_growth: f64,
    pub outer_bc: OuterBc,
    #[serde(default = "default_reg")]
    pub reg_eps: f64,
    /// Tolerance on `dt·Σ|R_i|`, the per-step mass defect, relative to `max(1, mass)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub checkpoint_times: Vec<f64>,
}

fn default_growth() -> f64 {
    1.0
}

fn default_reg() -> f64 {
    1e-8
}

impl SolverConfig {
    pub fn new(dt: f64, outer_bc: OuterBc, checkpoint_times: Vec<f64>) -> Self {
        SolverConfig {
            dt,
            dt_min: dt * 1e-6,
            dt_max: dt,
            dt_growth: 1.0,
            outer_bc,
            reg_eps: default_reg(),
            newton_tol: 1e-12,
            newton_max_iter: 40,
            checkpoint_times,
        }
    }

    /// Starts at `dt` and grows geometrically by `growth` up to `dt_max`.
    pub fn growing(mut self, growth: f64, dt_max: f64) -> Self {
        self.dt_growth = growth;
        self.dt_max = dt_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt_min > 0.0
            && self.dt_min <= self.dt
            && self.dt <= self.dt_max
            && self.dt_growth >= 1.0
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0
            && self.reg_eps >= 0.0;
        if !ok {
            return Err(validation("solver config needs 0 < dt_min ≤ dt ≤ dt_max, dt_growth ≥ 1, newton_tol > 0"));
        }
        if self.checkpoint_times.is_empty() || self.checkpoint_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(validation("checkpoint_times must be nonempty and strictly increasing"));
        }
        Ok(())
    }
}

/// Per-step mass bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MassLedger {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    /// Cumulative mass that left through the outer boundary.
    pub boundary_outflux: Vec<f64>,
    pub sup_u: Vec<f64>,
    /// Cumulative mass added by clipping negative values.
    pub clipped_mass: Vec<f64>,
    /// `L¹` distance to the reference solution, `NaN` without one.
    pub l1_to_reference: Vec<f64>,
}

impl MassLedger {
    pub fn start(t: f64, mass: f64, sup: f64) -> Self {
        MassLedger {
            times: vec![t],
            masses: vec![mass],
            boundary_outflux: vec![0.0],
            sup_u: vec![sup],
            clipped_mass: vec![0.0],
            l1_to_reference: vec![f64::NAN],
        }
    }

    pub fn push(&mut self, t: f64, mass: f64, outflux: f64, sup: f64, clipped: f64) {
        self.times.push(t);
        self.masses.push(mass);
        self.boundary_outflux.push(outflux);
        self.sup_u.push(sup);
        self.clipped_mass.push(clipped);
        self.l1_to_reference.push(f64::NAN);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|M_i + outflux_i − clipped_i − M_0|`.
    pub fn closure_defect(&self) -> f64 {
        let m0 = self.masses[0];
        (0..self.len())
            .map(|i| (self.masses[i] + self.boundary_outflux[i] - self.clipped_mass[i] - m0).abs())
            .fold(0.0, f64::max)
    }

    /// Mass at time `t` by linear interpolation.
    pub fn mass_at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|x| *x < t);
        if i == 0 {
            return (self.times.first() == Some(&t)).then(|| self.masses[0]);
        }
        if i >= self.len() {
            return None;
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(self.masses[i - 1] * (1.0 - w) + self.masses[i] * w)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub spec: EquationSpec,
    pub config: SolverConfig,
    pub grid: RadialGrid,
    pub checkpoints: Vec<Field>,
    pub ledger: MassLedger,
}

/// Initial data for [`init_state`].
pub enum InitialData<'a> {
    Function(&'a dyn Fn(f64) -> f64),
    Solution(&'a ClosedFormSolution, f64),
}

/// Cell averages of `data` by per-cell adaptive quadrature.
pub fn init_state(grid: &RadialGrid, data: &InitialData) -> Result<Field> {
    let (f, t0): (Box<dyn Fn(f64) -> f64 + '_>, f64) = match data {
        InitialData::Function(f) => (Box::new(f), 0.0),
        InitialData::Solution(sol, t) => {
            sol.evaluate_radial(0.0, *t)?;
            (Box::new(move |r| sol.evaluate_radial(r, *t).unwrap_or(f64::NAN)), *t)
        }
    };
    let negative = Cell::new(false);
    let k = grid.n as i32 - 1;
    let vols = grid.volumes();
    let w = crate::special::omega(grid.n);
    let mut values = Vec::with_capacity(grid.cells());
    for (i, face) in grid.r_faces.windows(2).enumerate() {
        let q = integrate(
            |r| {
                let v = f(r);
                if v < 0.0 {
                    negative.set(true);
                }
                v * r.powi(k)
            },
            face[0],
            face[1],
            1e-300,
            1e-13,
        )?;
        values.push(w * q.value / vols[i]);
    }
    if negative.get() {
        return Err(validation("initial data must be nonnegative"));
    }
    let field = Field::new(values, t0);
    field.check_finite()?;
    Ok(field)
}

#[derive(Debug, Clone, Copy)]
enum Flux {
    /// `Φ = (φ(u))_r` solved in `u`, `φ(u) = |u|^{m−1}u`.
    FiltrationU { m: f64 },
    /// `Φ = w_r` solved in `w = φ(u)`; `m = 0` means `φ = log`.
    FiltrationW { m: f64 },
    Ple { p: f64 },
    Tvf,
}

impl Flux {
    fn for_spec(spec: &EquationSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.family {
            Family::He => Flux::FiltrationU { m: 1.0 },
            Family::PmeFde => {
                let m = spec.m()?;
                if m >= 1.0 {
                    Flux::FiltrationU { m }
                } else {
                    Flux::FiltrationW { m }
                }
            }
            Family::LogDiff => Flux::FiltrationW { m: 0.0 },
            Family::Ple => Flux::Ple { p: spec.p()? },
            Family::Tvf => Flux::Tvf,
            other => return Err(validation(format!("radial solver does not support {}", other.name()))),
        })
    }

    /// Maps `u` to the Newton variable.
    fn to_var(self, u: f64) -> f64 {
        match self {
            Flux::FiltrationW { m: 0.0 } => u.ln(),
            Flux::FiltrationW { m } => u.powf(m),
            _ => u,
        }
    }

    /// `u(v)` and `du/dv`.
    fn of_var(self, v: f64) -> (f64, f64) {
        match self {
            Flux::FiltrationW { m: 0.0 } => {
                let e = v.exp();
                (e, e)
            }
            Flux::FiltrationW { m } => {
                let a = v.abs();
                (v.signum() * a.powf(1.0 / m), a.powf(1.0 / m - 1.0) / m)
            }
            _ => (v, 1.0),
        }
    }
}

/// Tridiagonal solve; row `i` reads `sub[i] x_{i−1} + dia[i] x_i + sup[i] x_{i+1} = rhs[i]`.
/// `dia` is overwritten and `rhs` becomes the solution.
pub(crate) fn thomas(sub: &[f64], dia: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = dia.len();
    for i in 1..n {
        let w = sub[i] / dia[i - 1];
        dia[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= dia[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / dia[i];
    }
}

struct Geometry {
    vols: Vec<f64>,
    /// face areas, index j = 0..=n
    areas: Vec<f64>,
    /// distance between the values a face connects (centre-centre, or centre-R at j = n)
    dist: Vec<f64>,
}

impl Geometry {
    fn new(grid: &RadialGrid) -> Self {
        let c = grid.centers();
        let n = c.len();
        let mut dist = vec![0.0; n + 1];
        for j in 1..n {
            dist[j] = c[j] - c[j - 1];
        }
        dist[n] = grid.radius() - c[n - 1];
        Geometry { vols: grid.volumes(), areas: grid.face_areas(), dist }
    }
}

/// One accepted backward-Euler step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub field: Field,
    /// Mass that left through `r = R` during the step.
    pub outflux: f64,
    /// Mass added by clipping negative values.
    pub clipped: f64,
    pub newton_iterations: usize,
}

struct Stepper<'a> {
    flux: Flux,
    geo: &'a Geometry,
    cfg: &'a SolverConfig,
}

impl Stepper<'_> {
    /// Flux through face `j` and its partials with respect to the right and left variables.
    fn face(&self, j: usize, vl: f64, vr: f64) -> (f64, f64, f64) {
        let d = self.geo.dist[j];
        let eps = self.cfg.reg_eps;
        match self.flux {
            Flux::FiltrationU { m } => {
                let phi = |u: f64| u.signum() * u.abs().powf(m);
                let dphi = |u: f64| if m == 1.0 { 1.0 } else { m * (u.abs() + eps).powf(m - 1.0) };
                ((phi(vr) - phi(vl)) / d, dphi(vr) / d, -dphi(vl) / d)
            }
            Flux::FiltrationW { .. } => ((vr - vl) / d, 1.0 / d, -1.0 / d),
            Flux::Ple { p } => {
                let g = (vr - vl) / d;
                let q = g * g + eps * eps;
                let a = q.powf(0.5 * (p - 2.0));
                let da = q.powf(0.5 * (p - 4.0)) * ((p - 1.0) * g * g + eps * eps);
                (a * g, da / d, -da / d)
            }
            Flux::Tvf => {
                let g = (vr - vl) / d;
                let q = (g * g + eps * eps).sqrt();
                let da = eps * eps / (q * q * q);
                (g / q, da / d, -da / d)
            }
        }
    }

    /// Residuals `R_i` and the tridiagonal Jacobian in the Newton variable.
    #[allow(clippy::type_complexity)]
    fn residual(&self, v: &[f64], u_old: &[f64], dt: f64, bc: Option<f64>, jac: bool) -> (Vec<f64>, f64, [Vec<f64>; 3]) {
        let n = v.len();
        let g = self.geo;
        let mut r = vec![0.0; n];
        let mut sub = vec![0.0; if jac { n } else { 0 }];
        let mut dia = vec![0.0; if jac { n } else { 0 }];
        let mut sup = vec![0.0; if jac { n } else { 0 }];
        for i in 0..n {
            let (u, du) = self.flux.of_var(v[i]);
            r[i] = g.vols[i] * (u - u_old[i]) / dt;
            if jac {
                dia[i] = g.vols[i] * du / dt;
            }
        }
        // interior faces: cell j−1 gains A Φ, cell j loses it
        for j in 1..n {
            let (phi, a, b) = self.face(j, v[j - 1], v[j]);
            let af = g.areas[j];
            r[j - 1] -= af * phi;
            r[j] += af * phi;
            if jac {
                dia[j - 1] -= af * b;
                sup[j - 1] -= af * a;
                sub[j] += af * b;
                dia[j] += af * a;
            }
        }
        let mut boundary_flux = 0.0;
        if let Some(gv) = bc {
            let (phi, _, b) = self.face(n, v[n - 1], gv);
            boundary_flux = g.areas[n] * phi;
            r[n - 1] -= boundary_flux;
            if jac {
                dia[n - 1] -= g.areas[n] * b;
            }
        }
        (r, boundary_flux, [sub, dia, sup])
    }

    fn step(&self, u_old: &[f64], dt: f64, bc: Option<f64>) -> Result<(Vec<f64>, f64, f64, usize)> {
        let bcv = bc.map(|b| self.flux.to_var(b));
        let mut v: Vec<f64> = u_old.iter().map(|u| self.flux.to_var(*u)).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("state not representable in the Newton variable (u = 0 with log?)".into()));
        }
        let norm = |r: &[f64]| dt * r.iter().map(|x| x.abs()).sum::<f64>();
        // the Newton direction descends on the L2 merit, not on the L1 stopping norm
        let merit = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
        let (mut r, mut bflux, mut jac) = self.residual(&v, u_old, dt, bcv, true);
        let mass: f64 = u_old.iter().zip(&self.geo.vols).map(|(u, v)| u * v).sum();
        let tol = self.cfg.newton_tol * mass.max(1.0);
        let mut res = norm(&r);
        let mut fit = merit(&r);
        let mut it = 0;
        while res > tol {
            if it >= self.cfg.newton_max_iter {
                return Err(Error::StepRejected(format!("Newton residual {res:.3e} after {it} iterations")));
            }
            it += 1;
            let [sub, mut dia, sup] = jac;
            let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
            thomas(&sub, &mut dia, &sup, &mut delta);
            if delta.iter().any(|x| !x.is_finite()) {
                return Err(Error::StepRejected("singular Newton system".into()));
            }
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
                let (rt, bt, jt) = self.residual(&trial, u_old, dt, bcv, true);
                let nt = norm(&rt);
                let ft = merit(&rt);
                if nt.is_finite() && (ft < fit || nt <= tol) {
                    v = trial;
                    r = rt;
                    bflux = bt;
                    jac = jt;
                    res = nt;
                    fit = ft;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    return Err(Error::StepRejected(format!("line search stalled at residual {res:.3e}")));
                }
            }
        }
        let mut clipped = 0.0;
        let u: Vec<f64> = v
            .iter()
            .zip(&self.geo.vols)
            .map(|(x, vol)| {
                let u = self.flux.of_var(*x).0;
                if u < 0.0 {
                    clipped -= u * vol;
                    0.0
                } else {
                    u
                }
            })
            .collect();
        Ok((u, -dt * bflux, clipped, it))
    }
}

fn boundary_value(config: &SolverConfig, reference: Option<&ClosedFormSolution>, t: f64, radius: f64) -> Result<Option<f64>> {
    match config.outer_bc {
        OuterBc::ZeroFlux => Ok(None),
        OuterBc::Dirichlet0 => Ok(Some(0.0)),
        OuterBc::Reference => {
            let sol = reference.ok_or_else(|| validation("reference boundary condition needs a reference solution"))?;
            Ok(Some(sol.evaluate_radial(radius, t)?))
        }
    }
}

/// One backward-Euler step of size `dt` from `state`.
pub fn step(
    state: &Field,
    spec: &EquationSpec,
    grid: &RadialGrid,
    config: &SolverConfig,
    dt: f64,
    reference: Option<&ClosedFormSolution>,
) -> Result<StepResult> {
    if !(dt > 0.0) {
        return Err(validation("dt must be positive"));
    }
    state.check_finite()?;
    if state.values.len() != grid.cells() {
        return Err(validation("state does not match the grid"));
    }
    let flux = Flux::for_spec(spec)?;
    let geo = Geometry::new(grid);
    let stepper = Stepper { flux, geo: &geo, cfg: config };
    let bc = boundary_value(config, reference, state.time + dt, grid.radius())?;
    let (u, outflux, clipped, newton_iterations) = stepper.step(&state.values, dt, bc)?;
    let field = Field::new(u, state.time + dt);
    field.check_finite()?;
    Ok(StepResult { field, outflux, clipped, newton_iterations })
}

/// Integrates from `data` to the last checkpoint.
pub fn run(spec: &EquationSpec, data: &InitialData, grid: &RadialGrid, config: &SolverConfig) -> Result<RunRecord> {
    run_with_reference(spec, data, grid, config, None)
}

/// As [`run`], with an optional reference solution used for the `Reference`
/// boundary condition and for the `l1_to_reference` ledger column.
pub fn run_with_reference(
    spec: &EquationSpec,
    data: &InitialData,
    grid: &RadialGrid,
    config: &SolverConfig,
    reference: Option<&ClosedFormSolution>,
) -> Result<RunRecord> {
    config.validate()?;
    let flux = Flux::for_spec(spec)?;
    if spec.n != grid.n {
        return Err(validation(format!("spec has N = {} but grid has N = {}", spec.n, grid.n)));
    }
    let state = init_state(grid, data)?;
    if config.checkpoint_times[0] <= state.time {
        return Err(validation("checkpoints must come after the initial time"));
    }
    let geo = Geometry::new(grid);
    let stepper = Stepper { flux, geo: &geo, cfg: config };
    let l1 = |f: &Field| -> f64 {
        reference.map_or(f64::NAN, |r| crate::diagnostics::l1_distance(f, grid, r, f.time).unwrap_or(f64::NAN))
    };
    let mut ledger = MassLedger::start(state.time, state.mass(grid), state.sup());
    ledger.l1_to_reference[0] = l1(&state);
    let mut u = state.values;
    let mut t = state.time;
    let mut dt = config.dt;
    let (mut out_cum, mut clip_cum) = (0.0, 0.0);
    let mut checkpoints = Vec::new();
    for &target in &config.checkpoint_times {
        while target - t > 1e-12 * target.abs().max(1.0) {
            let h = dt.min(target - t);
            let bc = boundary_value(config, reference, t + h, grid.radius())?;
            match stepper.step(&u, h, bc) {
                Ok((un, outflux, clipped, _)) => {
                    u = un;
                    t = if h == target - t { target } else { t + h };
                    out_cum += outflux;
                    clip_cum += clipped;
                    let f = Field::new(u.clone(), t);
                    f.check_finite()?;
                    ledger.push(t, f.mass(grid), out_cum, f.sup(), clip_cum);
                    if reference.is_some() {
                        *ledger.l1_to_reference.last_mut().expect("pushed") = l1(&f);
                    }
                    if h == dt {
                        dt = (dt * config.dt_growth).min(config.dt_max);
                    }
                }
                Err(Error::StepRejected(msg)) => {
                    if h / 2.0 < config.dt_min {
                        return Err(Error::StepRejected(format!("dt fell below dt_min at t = {t}: {msg}")));
                    }
                    dt = h / 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        checkpoints.push(Field::new(u.clone(), t));
    }
    Ok(RunRecord { spec: spec.clone(), config: config.clone(), grid: grid.clone(), checkpoints, ledger })
}

/// First ledger time at which `sup u` drops below `threshold`.
pub fn extinction_time(record: &RunRecord, threshold: f64) -> Option<f64> {
    extinction_time_of(&record.ledger, threshold)
}

pub fn extinction_time_of(ledger: &MassLedger, threshold: f64) -> Option<f64> {
    ledger.sup_u.iter().position(|s| *s < threshold).map(|i| ledger.times[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_tridiagonal() {
        let sub = [0.0, 1.0, 1.0, 1.0];
        let sup = [1.0, 1.0, 1.0, 0.0];
        let mut dia = [4.0, 4.0, 4.0, 4.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                4.0 * x[i] + if i > 0 { x[i - 1] } else { 0.0 } + if i < 3 { x[i + 1] } else { 0.0 }
            })
            .collect();
        thomas(&sub, &mut dia, &sup, &mut rhs);
        for i in 0..4 {
            assert!((rhs[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = RadialGrid::uniform(2, 5.0, 50).unwrap();
        let zero = |_r: f64| 0.0;
        let cfg = SolverConfig::new(0.01, OuterBc::Dirichlet0, vec![0.1]);
        let rec = run(&EquationSpec::pme(2.0, 2), &InitialData::Function(&zero), &grid, &cfg).unwrap();
        assert!(rec.checkpoints[0].values.iter().all(|v| *v == 0.0));
    }
}
