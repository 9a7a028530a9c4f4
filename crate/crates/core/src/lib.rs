//! Numerical laboratory for mass conservation and mass loss in nonlinear
//! diffusion equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`regimes`]: exponent algebra and regime classification,
//! * [`closed_forms`]: explicit solutions, their masses and PDE residuals,
//! * [`grid_solver`]: radial finite-volume solver for the local equations,
//! * [`fractional`]: discrete fractional Laplacian, kernels and evolution,
//! * [`diagnostics`]: rate fits, distances and relative-mass series,
//! * [`limits`]: concentration scans near the critical exponents,
//! * [`verify`]: the acceptance experiments, shared by tests and the CLI.

// `!(x > 0.0)` is the idiom for rejecting NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod diagnostics;
pub mod error;
pub mod fractional;
pub mod grid;
pub mod grid_solver;
pub mod limits;
pub mod output;
pub mod quadrature;
pub mod regimes;
pub mod special;
pub mod verify;

pub use closed_forms::{ClosedFormSolution, MassLaw, MassLawKind, SolutionKind};
pub use error::{Error, Result};
pub use grid::{Field, RadialGrid};
pub use grid_solver::{MassLedger, OuterBc, RunRecord, SolverConfig};
pub use regimes::{EquationSpec, Family, Regime, RegimeReport, SimilarityExponents};

/// Crate version, embedded in every CSV metadata block.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
