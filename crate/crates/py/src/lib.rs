//! Python module `masslab`: equation specs, exact solutions, the radial
//! solver, concentration scans, kernels and the acceptance criteria.

use ::masslab as core;
use core::closed_forms::{make_solution, Extras};
use core::grid_solver::{run_with_reference, InitialData};
use core::limits::ScanFamily;
use core::{Error, OuterBc, RadialGrid, SolutionKind, SolverConfig};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::StepRejected(_) | Error::Resolution(_) | Error::DivergentMass(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_kind(kind: &str) -> PyResult<SolutionKind> {
    SolutionKind::ALL
        .into_iter()
        .find(|k| format!("{k:?}").eq_ignore_ascii_case(kind))
        .ok_or_else(|| PyValueError::new_err(format!("unknown solution kind {kind:?}")))
}

fn parse_bc(bc: &str) -> PyResult<OuterBc> {
    match bc {
        "dirichlet0" => Ok(OuterBc::Dirichlet0),
        "zero_flux" => Ok(OuterBc::ZeroFlux),
        "reference" => Ok(OuterBc::Reference),
        other => Err(PyValueError::new_err(format!("unknown boundary condition {other:?}; use dirichlet0, zero_flux or reference"))),
    }
}

/// A PDE instance: family name plus parameters.
#[pyclass(name = "EquationSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpec {
    inner: core::EquationSpec,
}

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (family, n, m=None, p=None, s=None, exps=None))]
    fn new(family: &str, n: usize, m: Option<f64>, p: Option<f64>, s: Option<f64>, exps: Option<Vec<f64>>) -> PyResult<Self> {
        let family: core::Family = family.parse().map_err(to_py)?;
        let inner = core::EquationSpec { family, m, p, s, n, exps };
        inner.validate().map_err(to_py)?;
        Ok(PySpec { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter(N)]
    fn n(&self) -> usize {
        self.inner.n
    }

    /// `(alpha, beta)` of the self-similar solution.
    fn exponents(&self) -> PyResult<(f64, f64)> {
        let e = core::regimes::similarity_exponents(&self.inner).map_err(to_py)?;
        Ok((e.alpha, e.beta))
    }

    fn critical_exponent(&self) -> PyResult<f64> {
        core::regimes::critical_exponent(self.inner.family, self.inner.n, self.inner.s).map_err(to_py)
    }

    /// Dict with `regime`, `critical_value`, `conserves_mass` and `remark`.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = core::regimes::classify(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("regime", format!("{:?}", r.regime))?;
        d.set_item("critical_value", r.critical_value)?;
        d.set_item("conserves_mass", r.conserves_mass)?;
        d.set_item("remark", r.remark)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("EquationSpec({:?})", self.inner)
    }
}

/// An exact solution with its constants.
#[pyclass(name = "ClosedFormSolution", frozen)]
struct PySolution {
    inner: core::ClosedFormSolution,
}

#[pymethods]
impl PySolution {
    /// `kind` is a solution name such as `"BarenblattPME"`; `T`, `a` and `C`
    /// are the extra parameters of the explicit families.
    #[new]
    #[pyo3(signature = (kind, spec, mass=1.0, T=None, a=None, C=None))]
    #[allow(non_snake_case)]
    fn new(kind: &str, spec: &PySpec, mass: f64, T: Option<f64>, a: Option<f64>, C: Option<f64>) -> PyResult<Self> {
        let extras = Extras { t_end: T, width: a, c: C };
        let inner = make_solution(parse_kind(kind)?, &spec.inner, mass, &extras).map_err(to_py)?;
        Ok(PySolution { inner })
    }

    #[getter(C)]
    fn c(&self) -> f64 {
        self.inner.c
    }

    fn evaluate(&self, r: f64, t: f64) -> PyResult<f64> {
        self.inner.evaluate_radial(r, t).map_err(to_py)
    }

    fn mass_at(&self, t: f64) -> PyResult<f64> {
        self.inner.mass_at(t).map_err(to_py)
    }

    /// Max-norm PDE residual on a uniform grid of `cells` cells on `[0, radius]`.
    fn residual_norm(&self, radius: f64, cells: usize, t: f64) -> PyResult<f64> {
        let grid = RadialGrid::uniform(self.inner.spec.n, radius, cells).map_err(to_py)?;
        self.inner.residual_norm(&grid, t).map_err(to_py)
    }
}

/// Runs the radial solver from `initial` at time `t0` on a uniform grid and
/// returns a dict with the ledger columns and the checkpoint profiles.
#[pyfunction]
#[pyo3(signature = (spec, initial, t0, radius, cells, dt, checkpoints, bc="zero_flux"))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    spec: &PySpec,
    initial: &PySolution,
    t0: f64,
    radius: f64,
    cells: usize,
    dt: f64,
    checkpoints: Vec<f64>,
    bc: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = RadialGrid::uniform(spec.inner.n, radius, cells).map_err(to_py)?;
    let cfg = SolverConfig::new(dt, parse_bc(bc)?, checkpoints);
    let sol = &initial.inner;
    let rec = py
        .detach(|| run_with_reference(&spec.inner, &InitialData::Solution(sol, t0), &grid, &cfg, Some(sol)))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("r", grid.centers())?;
    d.set_item("t", rec.ledger.times.clone())?;
    d.set_item("mass", rec.ledger.masses.clone())?;
    d.set_item("outflux", rec.ledger.boundary_outflux.clone())?;
    d.set_item("sup_u", rec.ledger.sup_u.clone())?;
    d.set_item("l1_to_reference", rec.ledger.l1_to_reference.clone())?;
    let profiles: Vec<(f64, Vec<f64>)> = rec.checkpoints.iter().map(|f| (f.time, f.values.clone())).collect();
    d.set_item("profiles", profiles)?;
    Ok(d)
}

/// `(eps, ln_C, ln_K, outer_mass_frac, clean)`.
type ScanTuple = (f64, f64, f64, f64, bool);

/// Rows of a concentration scan.
#[pyfunction]
fn concentration_scan(family: &str, n: usize, eps: Vec<f64>) -> PyResult<Vec<ScanTuple>> {
    let family = match family.to_ascii_lowercase().as_str() {
        "pme" | "fde" => ScanFamily::Pme,
        "ple" => ScanFamily::Ple,
        other => return Err(PyValueError::new_err(format!("unknown scan family {other:?}"))),
    };
    let rows = core::limits::concentration_scan(family, n, &eps).map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.eps, r.ln_c, r.ln_k, r.outer_mass_frac, r.is_clean())).collect())
}

/// Fractional heat kernel at `t = 1`: `(r, F, tail_slope)` on the default grid.
#[pyfunction]
fn kernel(py: Python<'_>, s: f64, n: usize) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let k = py
        .detach(|| core::fractional::kernel(s, n, &core::fractional::KernelGrid::default_for(n)))
        .map_err(to_py)?;
    Ok((k.r, k.f, k.tail_slope))
}

/// Runs one acceptance criterion; returns `(pass, report)`.
#[pyfunction]
fn verify(py: Python<'_>, id: u8) -> PyResult<(bool, String)> {
    let o = py.detach(|| core::verify::criterion(id)).map_err(to_py)?;
    Ok((o.pass, o.report()))
}

#[pymodule]
#[pyo3(name = "masslab")]
fn masslab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", core::VERSION)?;
    m.add_class::<PySpec>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_scan, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
