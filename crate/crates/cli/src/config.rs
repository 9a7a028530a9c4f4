//! Experiment configuration files (TOML).
//!
//! Every table rejects unknown keys. Parsing errors carry the line and column
//! reported by the TOML parser; semantic errors name the offending field.

use crate::error::{io, CliError, Result};
use masslab::closed_forms::{make_solution, Extras};
use masslab::fractional::{FracConfig, FracGrid};
use masslab::{ClosedFormSolution, EquationSpec, OuterBc, RadialGrid, SolutionKind, SolverConfig};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Radial grid on `[0, radius]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform { radius: f64, cells: usize },
    /// Spacing `h` up to `core`, then growing by `growth` up to `max_h`.
    Stretched { radius: f64, core: f64, h: f64, growth: f64, max_h: f64 },
}

impl GridSpec {
    pub fn radius(&self) -> f64 {
        match self {
            GridSpec::Uniform { radius, .. } | GridSpec::Stretched { radius, .. } => *radius,
        }
    }

    pub fn with_radius(&self, r: f64) -> GridSpec {
        let mut g = self.clone();
        match &mut g {
            GridSpec::Uniform { radius, .. } | GridSpec::Stretched { radius, .. } => *radius = r,
        }
        g
    }

    pub fn build(&self, n: usize) -> masslab::Result<RadialGrid> {
        match *self {
            GridSpec::Uniform { radius, cells } => RadialGrid::uniform(n, radius, cells),
            GridSpec::Stretched { radius, core, h, growth, max_h } => RadialGrid::stretched(n, radius, core, h, growth, max_h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub bc: OuterBc,
    pub checkpoints: Vec<f64>,
    /// Geometric growth of `dt` per accepted step; needs `dt_max`.
    #[serde(default)]
    pub growth: Option<f64>,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub newton_tol: Option<f64>,
    #[serde(default)]
    pub reg_eps: Option<f64>,
}

impl SolverSection {
    pub fn build(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.dt, self.bc, self.checkpoints.clone());
        if let Some(g) = self.growth {
            c = c.growing(g, self.dt_max.unwrap_or(self.dt));
        } else if let Some(d) = self.dt_max {
            c.dt_max = d;
        }
        if let Some(t) = self.newton_tol {
            c.newton_tol = t;
        }
        if let Some(e) = self.reg_eps {
            c.reg_eps = e;
        }
        c
    }
}

/// An exact solution, evaluated with the spec of the run it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub solution: SolutionKind,
    #[serde(default = "unit")]
    pub mass: f64,
    #[serde(default)]
    pub extras: Extras,
}

fn unit() -> f64 {
    1.0
}

impl SolutionSpec {
    pub fn build(&self, spec: &EquationSpec) -> masslab::Result<ClosedFormSolution> {
        make_solution(self.solution, spec, self.mass, &self.extras)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// The exact solution at time `t0`.
    ClosedForm {
        solution: SolutionKind,
        #[serde(default = "unit")]
        mass: f64,
        t0: f64,
        #[serde(default)]
        extras: Extras,
    },
    /// `(1 − |x|²/width²)₊²` scaled to `mass`, starting at `t = 0`.
    Bump { mass: f64, width: f64 },
}

impl InitialSpec {
    pub fn solution(&self) -> Option<SolutionSpec> {
        match self {
            InitialSpec::ClosedForm { solution, mass, extras, .. } => {
                Some(SolutionSpec { solution: *solution, mass: *mass, extras: *extras })
            }
            InitialSpec::Bump { .. } => None,
        }
    }

    /// Radial profile of the bump data in dimension `n`.
    pub fn bump(n: usize, mass: f64, width: f64) -> impl Fn(f64) -> f64 {
        let unit = masslab::verify::bump(n, mass);
        let scale = width.powi(n as i32);
        move |r| unit(r / width) / scale
    }
}

/// Cartesian sweep over the listed axes; absent axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub radius: Option<Vec<f64>>,
    #[serde(default)]
    pub m: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    /// Concurrent runs; defaults to the number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    /// Window `[t0, t1]` for the least-squares mass loss rate.
    #[serde(default)]
    pub loss_window: Option<(f64, f64)>,
    /// Extinction is declared when `sup u` falls below this fraction of its initial value.
    #[serde(default)]
    pub extinction_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Results go to `<dir>/<config hash>/`.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write one profile CSV per checkpoint.
    #[serde(default = "yes")]
    pub profiles: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), profiles: true }
    }
}

/// Configuration of `masslab solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub spec: EquationSpec,
    pub grid: GridSpec,
    pub solver: SolverSection,
    pub initial: InitialSpec,
    /// Exact solution for the `l1_to_reference` column and the `reference` boundary condition.
    /// Defaults to the initial closed form when there is one.
    #[serde(default)]
    pub reference: Option<SolutionSpec>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracGridSpec {
    /// 1 or 2.
    pub dim: usize,
    /// Half-width of the square computational domain.
    pub extent: f64,
    /// Nodes per axis.
    pub n: usize,
}

/// Time stepping of `masslab frac run`; omitted keys take the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracSolverSection {
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub newton_tol: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
}

impl FracSolverSection {
    pub fn build(&self) -> FracConfig {
        let d = FracConfig::default();
        FracConfig {
            dt: self.dt.unwrap_or(d.dt),
            dt_max: self.dt_max.unwrap_or(d.dt_max),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            cfl: self.cfl.unwrap_or(d.cfl),
            checkpoint_times: self.checkpoints.clone(),
            ..d
        }
    }
}

/// Configuration of `masslab frac run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracRunConfig {
    pub spec: EquationSpec,
    pub grid: FracGridSpec,
    pub solver: FracSolverSection,
    pub initial: InitialSpec,
    #[serde(default)]
    pub reference: Option<SolutionSpec>,
    #[serde(default)]
    pub output: OutputSection,
}

impl FracRunConfig {
    pub fn frac_grid(&self) -> masslab::Result<FracGrid> {
        FracGrid::with_extent(self.grid.dim, self.grid.extent, self.grid.n)
    }
}

/// Reads and parses a TOML file into `T`.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    toml::from_str(&text).map_err(|source| CliError::Config { path: path.to_owned(), source })
}

/// First 16 hex digits of the SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("configs serialize to JSON");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [spec]
        family = "PME_FDE"
        m = 2.0
        N = 1

        [grid]
        kind = "uniform"
        radius = 4.0
        cells = 100

        [solver]
        dt = 0.01
        bc = "zero_flux"
        checkpoints = [2.0]

        [initial]
        kind = "closed_form"
        solution = "BarenblattPME"
        t0 = 1.0
    "#;

    #[test]
    fn parses_and_hashes_stably() {
        let a: SolveConfig = toml::from_str(BASE).unwrap();
        let b: SolveConfig = toml::from_str(BASE).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
        assert_eq!(a.output.dir, PathBuf::from("runs"));
        let mut c = a.clone();
        c.solver.dt = 0.02;
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_position() {
        let text = BASE.replace("cells = 100", "cells = 100\nspacing = 2");
        let err = toml::from_str::<SolveConfig>(&text).unwrap_err().to_string();
        assert!(err.contains("spacing"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn bump_has_the_requested_mass() {
        let f = InitialSpec::bump(3, 2.0, 0.5);
        let h = 1e-4;
        let m: f64 = (0..5000).map(|i| (i as f64 + 0.5) * h).map(|r| f(r) * 4.0 * std::f64::consts::PI * r * r * h).sum();
        assert!((m - 2.0).abs() < 1e-6);
    }
}
