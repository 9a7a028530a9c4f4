//! Restricted fractional Laplacian `(−Δ)^s` on uniform 1D/2D grids with zero
//! exterior, the fractional heat kernel, and time stepping for FHE/FPME.
//!
//! Normalization: `(−Δ)^s f(x) = c_{N,s} PV ∫ (f(x) − f(y)) |x − y|^{−N−2s} dy`
//! with `c_{N,s} = 4^s Γ(N/2+s) / (π^{N/2} |Γ(−s)|)`, so the symbol is `|ξ|^{2s}`.
//!
//! The discrete operator is `(A f)_i = c h^{−2s} (D f_i − Σ_{j≠i} W_{i−j} f_j)` with
//! positive Toeplitz weights `W` and a constant diagonal `D = Σ_{k≠0} W_k` over the
//! infinite lattice. Row sums restricted to the grid equal the exterior weight
//! `E_i = D − Σ_{j≠i in grid} W_{i−j} > 0`.

pub mod evolve;
pub mod kernel;
pub mod weights;

pub use evolve::{frac_run, FracConfig, FracRunRecord};
pub use kernel::{kernel, KernelGrid, KernelProfile, KernelTable};

use crate::error::{validation, Error, Result};
use crate::grid::Field;
use crate::quadrature::{gauss_legendre, integrate};
use crate::special::frac_constant;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use weights::{end_weight, WeightTable};

/// Largest supported 2D grid side.
pub const MAX_2D_SIDE: usize = 256;

/// Uniform grid with `n` nodes per axis at `x_j = (j − (n−1)/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracGrid {
    pub dim: usize,
    pub h: f64,
    pub n: usize,
}

impl FracGrid {
    pub fn new(dim: usize, h: f64, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(validation("fractional grids are 1D or 2D"));
        }
        if !(h > 0.0) || n < 2 {
            return Err(validation("fractional grid needs h > 0 and at least 2 nodes"));
        }
        if dim == 2 && n > MAX_2D_SIDE {
            return Err(validation(format!("2D grids are limited to {MAX_2D_SIDE}² nodes, got {n}²")));
        }
        Ok(FracGrid { dim, h, n })
    }

    /// Grid of half-width `extent` (nodes at `±(extent − h/2)`).
    pub fn with_extent(dim: usize, extent: f64, n: usize) -> Result<Self> {
        Self::new(dim, 2.0 * extent / n as f64, n)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.n as f64 - 1.0)) * self.h
    }

    /// Node positions; for 2D, row-major `(x, y)` pairs flattened as `x + n*y`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self.dim {
            1 => (0..self.n).map(|j| vec![self.coord(j)]).collect(),
            _ => (0..self.len()).map(|i| vec![self.coord(i % self.n), self.coord(i / self.n)]).collect(),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn extent(&self) -> f64 {
        0.5 * self.n as f64 * self.h
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().iter().map(|p| f(p.iter().map(|x| x * x).sum::<f64>().sqrt())).collect()
    }
}

/// Circular convolution with a fixed kernel via FFT.
#[derive(Clone)]
struct Convolver {
    dim: usize,
    /// padded side length
    m: usize,
    n: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Convolver {{ dim: {}, m: {} }}", self.dim, self.m)
    }
}

fn fft2(buf: &mut [Complex64], m: usize, fft: &Arc<dyn rustfft::Fft<f64>>) {
    fft.process(buf);
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        for r in 0..m {
            col[r] = buf[c + m * r];
        }
        fft.process(&mut col);
        for r in 0..m {
            buf[c + m * r] = col[r];
        }
    }
}

impl Convolver {
    /// `kern(d)` gives the weight at signed offset `d` (per axis).
    fn new(dim: usize, n: usize, kern: impl Fn(&[i64]) -> f64) -> Self {
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let wrap = |d: i64| -> usize { d.rem_euclid(m as i64) as usize };
        let span = n as i64 - 1;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); m.pow(dim as u32)];
        if dim == 1 {
            for d in -span..=span {
                spectrum[wrap(d)] = Complex64::new(kern(&[d]), 0.0);
            }
            fwd.process(&mut spectrum);
        } else {
            for dy in -span..=span {
                for dx in -span..=span {
                    spectrum[wrap(dx) + m * wrap(dy)] = Complex64::new(kern(&[dx, dy]), 0.0);
                }
            }
            fft2(&mut spectrum, m, &fwd);
        }
        Convolver { dim, m, n, spectrum, fwd, inv }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m.pow(self.dim as u32)];
        if self.dim == 1 {
            for (i, v) in f.iter().enumerate() {
                buf[i] = Complex64::new(*v, 0.0);
            }
            self.fwd.process(&mut buf);
        } else {
            for (i, v) in f.iter().enumerate() {
                buf[i % n + m * (i / n)] = Complex64::new(*v, 0.0);
            }
            fft2(&mut buf, m, &self.fwd);
        }
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= k;
        }
        let scale = 1.0 / buf.len() as f64;
        if self.dim == 1 {
            self.inv.process(&mut buf);
            buf[..n].iter().map(|c| c.re * scale).collect()
        } else {
            fft2(&mut buf, m, &self.inv);
            (0..n * n).map(|i| buf[i % n + m * (i / n)].re * scale).collect()
        }
    }
}

type Offdiag = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;

/// Discrete restricted fractional Laplacian on a [`FracGrid`].
#[derive(Clone)]
pub struct FracOperator {
    pub s: f64,
    pub grid: FracGrid,
    /// `c_{N,s} h^{−2s}`
    pub scale: f64,
    /// Lattice diagonal `D` (dimensionless).
    pub diag: f64,
    /// Per-node exterior weight `E_i` (dimensionless).
    pub exterior: Vec<f64>,
    offdiag: Offdiag,
    conv: Convolver,
}

impl std::fmt::Debug for FracOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FracOperator").field("s", &self.s).field("grid", &self.grid).field("diag", &self.diag).finish()
    }
}

/// Dimensionless 2D cell weights `∫_{cell(a,b)} |z|^{−2−2s} dz`, plus the
/// central-cell moments.
struct Weights2d {
    side: usize,
    w: Vec<f64>,
    diag: f64,
}

impl Weights2d {
    fn new(s: f64, side: usize) -> Result<Self> {
        let rule = gauss_legendre(12);
        let e = -2.0 - 2.0 * s;
        // ∫ over the square [x0, x0+w] × [y0, y0+w]
        let square = |x0: f64, y0: f64, w: f64| -> f64 {
            let mut acc = 0.0;
            for (xi, wi) in rule.0.iter().zip(&rule.1) {
                for (yj, wj) in rule.0.iter().zip(&rule.1) {
                    let (x, y) = (x0 + 0.5 * w * (1.0 + xi), y0 + 0.5 * w * (1.0 + yj));
                    acc += wi * wj * (x * x + y * y).powf(0.5 * e);
                }
            }
            0.25 * w * w * acc
        };
        let mut w = vec![0.0; side * side];
        for b in 0..side {
            for a in 0..side {
                if a == 0 && b == 0 {
                    continue;
                }
                let (af, bf) = (a as f64, b as f64);
                let rho2 = af * af + bf * bf;
                w[a + side * b] = match a.max(b) {
                    0..=2 => {
                        let mut acc = 0.0;
                        for i in 0..4 {
                            for j in 0..4 {
                                acc += square(af - 0.5 + 0.25 * i as f64, bf - 0.5 + 0.25 * j as f64, 0.25);
                            }
                        }
                        acc
                    }
                    3..=12 => square(af - 0.5, bf - 0.5, 1.0),
                    _ => rho2.powf(0.5 * e) * (1.0 + e * e / (24.0 * rho2)),
                };
            }
        }
        // Near field: −(Δf/4) ∫_{cell0} |y|^{−2s} dy, spread onto the 4 neighbours.
        let q0 = 8.0 / (2.0 - 2.0 * s)
            * integrate(|t: f64| (2.0 * t.cos()).powf(-(2.0 - 2.0 * s)), 0.0, std::f64::consts::FRAC_PI_4, 1e-15, 1e-14)?
                .value;
        let far = 8.0 / (2.0 * s)
            * integrate(|t: f64| (2.0 * t.cos()).powf(2.0 * s), 0.0, std::f64::consts::FRAC_PI_4, 1e-15, 1e-14)?.value;
        w[1] += 0.25 * q0;
        w[side] += 0.25 * q0;
        Ok(Weights2d { side, w, diag: far + q0 })
    }

    fn at(&self, dx: i64, dy: i64) -> f64 {
        let (a, b) = (dx.unsigned_abs() as usize, dy.unsigned_abs() as usize);
        self.w[a + self.side * b]
    }
}

impl FracOperator {
    pub fn new(s: f64, grid: FracGrid) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(validation(format!("s = {s} must lie in (0, 1)")));
        }
        let n = grid.n;
        let scale = frac_constant(grid.dim, s) * grid.h.powf(-2.0 * s);
        let (diag, offdiag): (f64, Offdiag) = if grid.dim == 1 {
            let table = Arc::new(WeightTable::new(s, n));
            let diag = 2.0 * table.total();
            let t = table.clone();
            (diag, Arc::new(move |d: &[i64]| if d[0] == 0 { 0.0 } else { t.w[d[0].unsigned_abs() as usize] }))
        } else {
            let w2 = Arc::new(Weights2d::new(s, n)?);
            let diag = w2.diag;
            let t = w2.clone();
            (diag, Arc::new(move |d: &[i64]| t.at(d[0], d[1])))
        };
        let k = offdiag.clone();
        let conv = Convolver::new(grid.dim, n, move |d| k(d));
        let inside = conv.apply(&vec![1.0; grid.len()]);
        let exterior: Vec<f64> = inside.iter().map(|v| diag - v).collect();
        if let Some(e) = exterior.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Numerical(format!("nonpositive exterior weight {e}")));
        }
        Ok(FracOperator { s, grid, scale, diag, exterior, offdiag, conv })
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(validation(format!("field has {} values, grid has {}", f.len(), self.grid.len())));
        }
        Ok(())
    }

    /// `(−Δ)^s f` for `f` zero outside the grid.
    pub fn apply_values(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let c = self.conv.apply(f);
        Ok(f.iter().zip(c).map(|(v, cv)| self.scale * (self.diag * v - cv)).collect())
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        Ok(Field::new(self.apply_values(&f.values)?, f.time))
    }

    /// Same operator by direct summation, `O(n²)`; reference route for tests.
    pub fn apply_dense(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let n = self.grid.n;
        let idx = |i: usize| -> Vec<i64> {
            if self.grid.dim == 1 {
                vec![i as i64]
            } else {
                vec![(i % n) as i64, (i / n) as i64]
            }
        };
        let len = self.grid.len();
        Ok((0..len)
            .map(|i| {
                let pi = idx(i);
                let mut acc = self.diag * f[i];
                for (j, fj) in f.iter().enumerate() {
                    if j != i {
                        let pj = idx(j);
                        let d: Vec<i64> = pi.iter().zip(&pj).map(|(a, b)| a - b).collect();
                        acc -= (self.offdiag)(&d) * fj;
                    }
                }
                self.scale * acc
            })
            .collect())
    }

    /// Largest eigenvalue bound `c h^{−2s} 2D` (Gershgorin).
    pub fn spectral_bound(&self) -> f64 {
        2.0 * self.scale * self.diag
    }

    /// `Σ_i E_i f_i` scaled: the rate at which mass leaks to the exterior for `u_t = −A f`.
    pub fn exterior_rate(&self, f: &[f64]) -> f64 {
        self.scale * self.exterior.iter().zip(f).map(|(e, v)| e * v).sum::<f64>() * self.grid.cell_volume()
    }
}

/// `(−Δ)^s f(x)` in 1D for a function known on the whole line.
///
/// Uses the second-order product rule on `[0, Y0]`, `Y0 = round(y0/h)·h`, and
/// adaptive quadrature for `∫_{Y0}^∞ G(y) y^{−1−2s} dy`.
pub fn apply_analytic(f: &dyn Fn(f64) -> f64, x: f64, s: f64, h: f64, y0: f64) -> Result<f64> {
    let k0 = ((y0 / h).round() as usize).max(1);
    let yk = k0 as f64 * h;
    let fx = f(x);
    let g = |y: f64| 2.0 * fx - f(x + y) - f(x - y);
    let mut near = 0.0;
    for k in 1..k0 {
        near += weights::weight(k, s) * g(k as f64 * h);
    }
    near += end_weight(k0, s) * g(yk);
    near *= h.powf(-2.0 * s);
    // y = Y0 v^{−1/(2s)} maps [Y0, ∞) onto (0, 1] with a constant Jacobian weight
    let far = yk.powf(-2.0 * s) / (2.0 * s)
        * integrate(|v: f64| g(yk * v.powf(-0.5 / s)), 0.0, 1.0, 1e-15, 1e-13)?.value;
    Ok(frac_constant(1, s) * (near + far))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fft_matches_dense_1d_and_2d() {
        let op = FracOperator::new(0.4, FracGrid::new(1, 0.1, 37).unwrap()).unwrap();
        let f: Vec<f64> = (0..37).map(|i| ((i as f64) * 0.37).sin().abs()).collect();
        let a = op.apply_values(&f).unwrap();
        let b = op.apply_dense(&f).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-9 * op.scale);
        }
        let op = FracOperator::new(0.6, FracGrid::new(2, 0.2, 9).unwrap()).unwrap();
        let f: Vec<f64> = (0..81).map(|i| 1.0 + ((i as f64) * 0.11).cos()).collect();
        let a = op.apply_values(&f).unwrap();
        let b = op.apply_dense(&f).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-9 * op.scale);
        }
    }

    #[test]
    fn poisson_oracle_zero_extended() {
        // (−Δ)^{1/2} (1+x²)^{-1} = (1−x²)/(1+x²)²
        let g = FracGrid::with_extent(1, 40.0, 1600).unwrap();
        let op = FracOperator::new(0.5, g).unwrap();
        let f = g.sample(|r| 1.0 / (1.0 + r * r));
        let a = op.apply_values(&f).unwrap();
        for (j, v) in a.iter().enumerate() {
            let x = g.coord(j);
            if x.abs() < 5.0 {
                let exact = (1.0 - x * x) / (1.0 + x * x).powi(2);
                assert!((v - exact).abs() < 2e-3, "x={x} {v} vs {exact}");
            }
        }
    }

    #[test]
    fn analytic_log_identity() {
        // (−Δ)^{1/2} log(1+x²) = −2/(1+x²)
        let f = |x: f64| (1.0 + x * x).ln();
        for x in [0.0, 0.7, 2.5] {
            let v = apply_analytic(&f, x, 0.5, 0.01, 10.0).unwrap();
            assert_relative_eq!(v, -2.0 / (1.0 + x * x), max_relative = 1e-4);
        }
    }

    #[test]
    fn rejects_large_2d() {
        assert!(FracGrid::new(2, 0.1, 512).is_err());
    }
}
