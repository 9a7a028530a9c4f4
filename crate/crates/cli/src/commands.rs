//! Subcommand implementations. Each returns what it wrote so that tests can
//! inspect it; printing is left to `main`.

use crate::config::{config_hash, load, FracRunConfig, InitialSpec, SolveConfig, SolutionSpec};
use crate::error::{io, CliError, Result};
use masslab::diagnostics::{frac_l1_distance, loss_rate};
use masslab::fractional::{frac_run, kernel, KernelGrid};
use masslab::grid_solver::{extinction_time_of, run_with_reference, InitialData};
use masslab::limits::{concentration_scan, ple1d_limit_scan, Ple1dOptions, ScanFamily};
use masslab::output::{frac_profile_csv, kernel_csv, ledger_csv, numeric_csv, profile_csv, scan_csv, Metadata};
use masslab::regimes::{classify, critical_exponent, similarity_exponents};
use masslab::verify::{criterion, run_suite, Outcome, Suite};
use masslab::{EquationSpec, Family, Field, MassLedger};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

fn make_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io(dir))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        "nan".into()
    }
}

// ------------------------------------------------------------------ exponents

/// Parameters of `masslab exponents`; `m` and `p` may hold several values.
#[derive(Debug, Clone)]
pub struct ExponentQuery {
    pub family: Family,
    pub n: usize,
    pub m: Vec<f64>,
    pub p: Vec<f64>,
    pub s: Option<f64>,
    pub exps: Option<Vec<f64>>,
}

/// One row of the exponents table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentRow {
    pub spec: EquationSpec,
    pub critical: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub regime: String,
    pub conserves_mass: bool,
    /// Why there are no exponents, or a caveat on the verdict.
    pub remark: String,
}

fn specs_of(q: &ExponentQuery) -> Vec<EquationSpec> {
    let opt = |v: &[f64]| -> Vec<Option<f64>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().copied().map(Some).collect()
        }
    };
    let mut out = Vec::new();
    for m in opt(&q.m) {
        for p in opt(&q.p) {
            out.push(EquationSpec { family: q.family, m, p, s: q.s, n: q.n, exps: q.exps.clone() });
        }
    }
    out
}

/// Classifies every spec of the query. A spec that fails validation aborts the
/// table; a spec without finite-mass self-similar solutions gets a remark.
pub fn exponents(q: &ExponentQuery) -> Result<Vec<ExponentRow>> {
    let mut rows = Vec::new();
    for spec in specs_of(q) {
        let report = classify(&spec)?;
        let critical = match critical_exponent(spec.family, spec.n, spec.s) {
            Ok(c) => Some(c),
            Err(masslab::Error::NotApplicable(_)) => report.critical_value,
            Err(e) => return Err(e.into()),
        };
        let (alpha, beta, mut remark) = match similarity_exponents(&spec) {
            Ok(e) => (Some(e.alpha), Some(e.beta), String::new()),
            Err(e @ masslab::Error::NoFiniteMassSelfSimilar(_)) => (None, None, e.to_string()),
            Err(e) => return Err(e.into()),
        };
        if let Some(r) = report.remark {
            if !remark.is_empty() {
                remark.push_str("; ");
            }
            remark.push_str(r);
        }
        rows.push(ExponentRow {
            spec,
            critical,
            alpha,
            beta,
            regime: format!("{:?}", report.regime),
            conserves_mass: report.conserves_mass,
            remark,
        });
    }
    Ok(rows)
}

pub fn exponents_table(rows: &[ExponentRow]) -> String {
    let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    let mut out = String::from("family,N,m,p,s,critical,alpha,beta,regime,conserves_mass,remark\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.spec.family.name(),
            r.spec.n,
            f(r.spec.m),
            f(r.spec.p),
            f(r.spec.s),
            f(r.critical),
            f(r.alpha),
            f(r.beta),
            r.regime,
            r.conserves_mass,
            r.remark.replace(',', ";")
        ));
    }
    out
}

// ---------------------------------------------------------------------- solve

/// One point of a solve sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub label: String,
    /// `m` or `p` of the point, NaN for families without either.
    pub param: f64,
    pub radius: f64,
    pub mass0: f64,
    pub mass_end: f64,
    pub loss_frac: f64,
    pub extinction_time: f64,
    pub loss_rate: f64,
    pub l1_final: f64,
}

pub const SOLVE_SUMMARY_COLUMNS: [&str; 8] =
    ["param", "R", "mass0", "mass_end", "loss_frac", "extinction_time", "loss_rate", "l1_final"];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub hash: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
struct Point {
    label: String,
    spec: EquationSpec,
    radius: f64,
}

fn sweep_points(cfg: &SolveConfig) -> Vec<Point> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let params: Vec<(Option<&str>, Option<f64>)> = match (&sweep.m, &sweep.p) {
        (Some(ms), _) => ms.iter().map(|m| (Some("m"), Some(*m))).collect(),
        (None, Some(ps)) => ps.iter().map(|p| (Some("p"), Some(*p))).collect(),
        (None, None) => vec![(None, None)],
    };
    let radii: Vec<(bool, f64)> = match &sweep.radius {
        Some(rs) => rs.iter().map(|r| (true, *r)).collect(),
        None => vec![(false, cfg.grid.radius())],
    };
    let mut out = Vec::new();
    for (axis, value) in &params {
        for (swept, radius) in &radii {
            let mut spec = cfg.spec.clone();
            let mut parts = Vec::new();
            match (*axis, *value) {
                (Some("m"), Some(v)) => {
                    spec.m = Some(v);
                    parts.push(format!("m{v}"));
                }
                (Some(_), Some(v)) => {
                    spec.p = Some(v);
                    parts.push(format!("p{v}"));
                }
                _ => {}
            }
            if *swept {
                parts.push(format!("R{radius}"));
            }
            let label = if parts.is_empty() { "run".into() } else { parts.join("_") };
            out.push(Point { label, spec, radius: *radius });
        }
    }
    out
}

struct PointResult {
    row: SolveRow,
    ledger: MassLedger,
    profiles: Vec<(masslab::RadialGrid, Field)>,
}

fn solve_point(cfg: &SolveConfig, pt: &Point) -> Result<PointResult> {
    let grid = cfg.grid.with_radius(pt.radius).build(pt.spec.n)?;
    let solver = cfg.solver.build();
    let reference_spec: Option<SolutionSpec> = cfg.reference.clone().or_else(|| cfg.initial.solution());
    let reference = reference_spec.map(|r| r.build(&pt.spec)).transpose()?;
    let record = match &cfg.initial {
        InitialSpec::ClosedForm { solution, mass, t0, extras } => {
            let sol = SolutionSpec { solution: *solution, mass: *mass, extras: *extras }.build(&pt.spec)?;
            run_with_reference(&pt.spec, &InitialData::Solution(&sol, *t0), &grid, &solver, reference.as_ref())?
        }
        InitialSpec::Bump { mass, width } => {
            let f = InitialSpec::bump(pt.spec.n, *mass, *width);
            run_with_reference(&pt.spec, &InitialData::Function(&f), &grid, &solver, reference.as_ref())?
        }
    };
    let l = &record.ledger;
    let mass0 = l.masses[0];
    let mass_end = *l.masses.last().expect("ledger starts nonempty");
    let extinction_time = cfg
        .analysis
        .extinction_threshold
        .and_then(|thr| extinction_time_of(l, thr * l.sup_u[0]))
        .unwrap_or(f64::NAN);
    let loss_rate = match cfg.analysis.loss_window {
        Some(w) => loss_rate(l, w)?.slope,
        None => f64::NAN,
    };
    let param = pt.spec.m.or(pt.spec.p).unwrap_or(f64::NAN);
    let row = SolveRow {
        label: pt.label.clone(),
        param,
        radius: pt.radius,
        mass0,
        mass_end,
        loss_frac: (mass0 - mass_end) / mass0,
        extinction_time,
        loss_rate,
        l1_final: *l.l1_to_reference.last().expect("ledger starts nonempty"),
    };
    let profiles = record.checkpoints.iter().map(|f| (grid.clone(), f.clone())).collect();
    Ok(PointResult { row, ledger: record.ledger, profiles })
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Usage("sweep.workers must be at least 1".into()));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Usage(format!("cannot start workers: {e}")))
}

/// Runs every sweep point of `cfg` and writes ledgers, profiles and `summary.csv`
/// under `<out>/<hash>/`. Rows are in sweep order whatever the completion order.
pub fn solve(cfg: &SolveConfig, out: Option<&Path>) -> Result<(RunOutput, Vec<SolveRow>)> {
    cfg.solver.build().validate()?;
    let hash = config_hash(cfg);
    let dir = out.unwrap_or(&cfg.output.dir).join(&hash);
    let points = sweep_points(cfg);
    let workers = cfg.sweep.as_ref().and_then(|s| s.workers);
    let results: Vec<Result<PointResult>> = pool(workers)?.install(|| points.par_iter().map(|p| solve_point(cfg, p)).collect());
    let results: Vec<PointResult> = results.into_iter().collect::<Result<_>>()?;

    make_dir(&dir)?;
    let meta = Metadata::new().with("config_hash", &hash).with("family", cfg.spec.family.name());
    let mut files = Vec::new();
    for r in &results {
        let m = meta.clone().with("point", &r.row.label);
        files.push(write(&dir, &format!("ledger_{}.csv", r.row.label), &ledger_csv(&r.ledger, &m))?);
        if cfg.output.profiles {
            for (i, (grid, f)) in r.profiles.iter().enumerate() {
                files.push(write(&dir, &format!("profile_{}_{i}.csv", r.row.label), &profile_csv(grid, f, &m))?);
            }
        }
    }
    let rows: Vec<SolveRow> = results.into_iter().map(|r| r.row).collect();
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.param, r.radius, r.mass0, r.mass_end, r.loss_frac, r.extinction_time, r.loss_rate, r.l1_final])
        .collect();
    files.push(write(&dir, "summary.csv", &numeric_csv(&SOLVE_SUMMARY_COLUMNS, &table, &meta))?);
    Ok((RunOutput { dir, hash, files }, rows))
}

pub fn solve_file(path: &Path, out: Option<&Path>) -> Result<(RunOutput, Vec<SolveRow>)> {
    let cfg: SolveConfig = load(path)?;
    solve(&cfg, out)
}

// ----------------------------------------------------------------------- frac

/// Runs a fractional evolution and writes `ledger.csv`, the checkpoint
/// profiles and `summary.csv` under `<out>/<hash>/`.
pub fn frac_solve(cfg: &FracRunConfig, out: Option<&Path>) -> Result<RunOutput> {
    let grid = cfg.frac_grid()?;
    let hash = config_hash(cfg);
    let dir = out.unwrap_or(&cfg.output.dir).join(&hash);
    let (values, t0) = match &cfg.initial {
        InitialSpec::ClosedForm { solution, mass, t0, extras } => {
            let sol = SolutionSpec { solution: *solution, mass: *mass, extras: *extras }.build(&cfg.spec)?;
            let v = grid.points().iter().map(|x| sol.evaluate(x, *t0)).collect::<masslab::Result<Vec<f64>>>()?;
            (v, *t0)
        }
        InitialSpec::Bump { mass, width } => {
            let f = InitialSpec::bump(grid.dim, *mass, *width);
            (grid.points().iter().map(|x| f(x.iter().map(|c| c * c).sum::<f64>().sqrt())).collect(), 0.0)
        }
    };
    let record = frac_run(&cfg.spec, &Field::new(values, t0), grid, &cfg.solver.build())?;
    let reference = cfg.reference.clone().or_else(|| cfg.initial.solution()).map(|r| r.build(&cfg.spec)).transpose()?;

    make_dir(&dir)?;
    let meta = Metadata::new().with("config_hash", &hash).with("family", cfg.spec.family.name());
    let mut files = vec![write(&dir, "ledger.csv", &ledger_csv(&record.ledger, &meta))?];
    let mut rows = Vec::new();
    for (i, f) in record.checkpoints.iter().enumerate() {
        if cfg.output.profiles {
            files.push(write(&dir, &format!("profile_{i}.csv"), &frac_profile_csv(&grid, &f.values, f.time, &meta))?);
        }
        let mass: f64 = f.values.iter().sum::<f64>() * grid.cell_volume();
        let l1 = match &reference {
            Some(r) => frac_l1_distance(&f.values, &grid, r, f.time)?,
            None => f64::NAN,
        };
        rows.push(vec![f.time, mass, f.sup(), l1]);
    }
    files.push(write(&dir, "summary.csv", &numeric_csv(&["t", "mass", "sup_u", "l1_to_reference"], &rows, &meta))?);
    Ok(RunOutput { dir, hash, files })
}

/// Computes the fractional heat kernel at `t = 1` and writes `kernel.csv`.
pub fn frac_kernel(s: f64, n: usize, grid: Option<KernelGrid>, out: &Path) -> Result<(RunOutput, f64, f64)> {
    let grid = grid.unwrap_or_else(|| KernelGrid::default_for(n));
    #[derive(Serialize)]
    struct Key {
        s: f64,
        n: usize,
        grid: KernelGrid,
    }
    let hash = config_hash(&Key { s, n, grid });
    let k = kernel(s, n, &grid)?;
    let dir = out.join(&hash);
    make_dir(&dir)?;
    let meta = Metadata::new().with("config_hash", &hash).with("tail_slope", num(k.tail_slope));
    let file = write(&dir, "kernel.csv", &kernel_csv(&k, &meta))?;
    Ok((RunOutput { dir, hash, files: vec![file] }, k.tail_slope, k.mass))
}

// ----------------------------------------------------------------------- scan

#[derive(Debug, Clone, Serialize)]
pub struct ScanQuery {
    pub family: ScanFamily,
    pub n: usize,
    pub eps0: f64,
    pub halvings: usize,
}

fn halvings(eps0: f64, count: usize) -> Vec<f64> {
    masslab::verify::halvings(eps0, count)
}

/// Concentration scan; writes `scan.csv`.
pub fn scan(q: &ScanQuery, out: &Path) -> Result<(RunOutput, Vec<masslab::limits::ScanRow>)> {
    let hash = config_hash(q);
    let rows = concentration_scan(q.family, q.n, &halvings(q.eps0, q.halvings))?;
    let dir = out.join(&hash);
    make_dir(&dir)?;
    let meta = Metadata::new().with("config_hash", &hash).with("family", format!("{:?}", q.family)).with("N", q.n);
    let file = write(&dir, "scan.csv", &scan_csv(&rows, &meta))?;
    Ok((RunOutput { dir, hash, files: vec![file] }, rows))
}

pub const PLE1D_COLUMNS: [&str; 7] = ["eps", "p", "bound_ratio", "bound_ratio_limit", "flux_R5", "t_cross", "t_cross_reference"];

/// One-dimensional `p → 1` scan; writes `ple1d.csv`.
pub fn scan_ple1d(eps0: f64, count: usize, out: &Path) -> Result<(RunOutput, Vec<Vec<f64>>)> {
    let options = Ple1dOptions::default();
    let hash = config_hash(&("ple1d", eps0, count, &options));
    let rows = ple1d_limit_scan(&halvings(eps0, count), &options)?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let flux = r.fluxes.iter().find(|(rad, _)| *rad == 5.0).map(|f| f.1).unwrap_or(f64::NAN);
            vec![r.eps, r.p, r.bound_ratio, r.bound_ratio_limit, flux, r.t_cross, r.t_cross_reference]
        })
        .collect();
    let dir = out.join(&hash);
    make_dir(&dir)?;
    let meta = Metadata::new().with("config_hash", &hash).with("flux_time", options.flux_time);
    let file = write(&dir, "ple1d.csv", &numeric_csv(&PLE1D_COLUMNS, &table, &meta))?;
    Ok((RunOutput { dir, hash, files: vec![file] }, table))
}

// --------------------------------------------------------------------- verify

/// Runs the suite, or the listed criteria. Panics inside a criterion are
/// reported as failures by the library.
pub fn verify(suite: Suite, ids: &[u8]) -> Result<Vec<Outcome>> {
    if ids.is_empty() {
        return Ok(run_suite(suite));
    }
    ids.iter().map(|&id| criterion(id).map_err(CliError::from)).collect()
}

/// Machine-readable report: one row per check.
pub fn verify_csv(outcomes: &[Outcome]) -> String {
    let mut out = String::from("id,criterion_pass,check,measured,expected,tolerance,pass\n");
    for o in outcomes {
        for c in &o.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                o.id,
                o.pass,
                c.label.replace(',', ";"),
                num(c.measured),
                num(c.expected),
                num(c.tolerance),
                c.pass
            ));
        }
    }
    out
}
