//! Fundamental solution of `u_t + (−Δ)^s u = 0` at `t = 1` by Fourier inversion
//! of `exp(−|ξ|^{2s})` on a padded periodic grid.
//!
//! The symbol is multiplied by a smooth cutoff near the Nyquist frequency, so the
//! truncation error is a rapidly decaying function and does not pollute the tail.
//! In 2D only the radial profile along the `x` axis is needed; summing the symbol
//! over `ξ_2` first turns the 2D inverse transform restricted to `y = 0` into a 1D one.

use crate::diagnostics::ols;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic grid for the kernel computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub h: f64,
    /// Points per axis of the periodic grid.
    pub size: usize,
    /// Radius up to which the profile is exported; the tail fit uses `[window/10, window]`.
    pub window: f64,
}

impl KernelGrid {
    /// Desk-scale defaults that pass the resolution checks for `s ∈ [0.3, 0.95]`.
    /// The 2D grid is sized for the tail: for small `s` the Nyquist cutoff still
    /// truncates the symbol, so values near the origin are only indicative.
    pub fn default_for(n: usize) -> Self {
        match n {
            1 => KernelGrid { h: 0.02, size: 1 << 21, window: 500.0 },
            _ => KernelGrid { h: 0.5, size: 1 << 14, window: 400.0 },
        }
    }
}

/// Radial profile of the kernel at `t = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelProfile {
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Radii `j·h`, `j = 0..`, up to the window.
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    /// Trapezoidal mass over the whole periodic grid.
    pub mass: f64,
    /// Minimum of the periodized kernel (periodic-image floor).
    pub image_floor: f64,
    pub tail_slope: f64,
    pub tail_fit_range: (f64, f64),
}

fn cutoff(x: f64) -> f64 {
    if x <= 0.5 {
        1.0
    } else {
        let t = (x - 0.5) / 0.5;
        (-36.0 * t.powi(8)).exp()
    }
}

fn signed(k: usize, size: usize) -> f64 {
    if k <= size / 2 {
        k as f64
    } else {
        k as f64 - size as f64
    }
}

/// Computes the kernel profile; fails with a resolution error when the periodic
/// images would contaminate the windowed mass by more than `1e−4`.
pub fn kernel(s: f64, n: usize, grid: &KernelGrid) -> Result<KernelProfile> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Validation(format!("s = {s} must lie in (0, 1)")));
    }
    if !(n == 1 || n == 2) {
        return Err(Error::Validation("kernel is available for N = 1, 2".into()));
    }
    let KernelGrid { h, size, window } = *grid;
    if size < 16 || size % 2 != 0 || !(h > 0.0) || window >= 0.5 * size as f64 * h {
        return Err(Error::Validation("kernel grid needs even size and window < half period".into()));
    }
    let period = size as f64 * h;
    let dxi = 2.0 * PI / period;
    let nyq = PI / h;
    let symbol = |xi: f64| (-xi.powf(2.0 * s)).exp() * cutoff(xi / nyq);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    if n == 1 {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(symbol(signed(k, size).abs() * dxi), 0.0);
        }
    } else {
        let half = size / 2;
        let mut p = vec![0.0; half + 1];
        for (k1, pk) in p.iter_mut().enumerate() {
            let x1 = k1 as f64 * dxi;
            let mut acc = symbol(x1) + symbol((x1 * x1 + (half as f64 * dxi).powi(2)).sqrt());
            for k2 in 1..half {
                let x2 = k2 as f64 * dxi;
                acc += 2.0 * symbol((x1 * x1 + x2 * x2).sqrt());
            }
            *pk = acc;
        }
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(p[k.min(size - k)], 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(size).process(&mut buf);
    let norm = 1.0 / period.powi(n as i32);
    let full: Vec<f64> = buf.iter().map(|c| c.re * norm).collect();
    let mass = match n {
        1 => h * full.iter().sum::<f64>(),
        // the full 2D grid sum equals the symbol at the origin
        _ => symbol(0.0),
    };
    let image_floor = full[..=size / 2].iter().cloned().fold(f64::INFINITY, f64::min);
    let measure = if n == 1 { 2.0 * window } else { PI * window * window };
    if !(image_floor > 0.0) || image_floor * measure > 1e-4 {
        return Err(Error::Resolution(format!(
            "periodic image floor {image_floor:.3e} over window measure {measure:.3e} exceeds 1e-4; enlarge the grid"
        )));
    }
    if (mass - 1.0).abs() > 1e-4 {
        return Err(Error::Resolution(format!("kernel mass {mass} deviates from 1 by more than 1e-4")));
    }
    let jmax = (window / h).floor() as usize;
    let r: Vec<f64> = (0..=jmax).map(|j| j as f64 * h).collect();
    let f: Vec<f64> = full[..=jmax].to_vec();
    let fit_range = (window / 10.0, window);
    let (lx, ly): (Vec<f64>, Vec<f64>) = r
        .iter()
        .zip(&f)
        .filter(|(ri, _)| **ri >= fit_range.0 && **ri <= fit_range.1)
        .map(|(ri, fi)| (ri.ln(), fi.ln()))
        .unzip();
    let fit = ols(&lx, &ly)?;
    Ok(KernelProfile { s, n, r, f, mass, image_floor, tail_slope: fit.0, tail_fit_range: fit_range })
}

impl KernelProfile {
    /// Mass inside the window by radial trapezoid, `ω_N ∫_0^W F r^{N−1} dr`.
    pub fn window_mass(&self) -> f64 {
        let w = crate::special::omega(self.n);
        let h = self.r[1] - self.r[0];
        let g: Vec<f64> = self.r.iter().zip(&self.f).map(|(r, f)| f * r.powi(self.n as i32 - 1)).collect();
        let inner: f64 = g[1..g.len() - 1].iter().sum();
        w * h * (inner + 0.5 * (g[0] + g[g.len() - 1]))
    }

    /// True if the sampled profile is non-increasing in `r`.
    pub fn is_radially_nonincreasing(&self) -> bool {
        self.f.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }

    pub fn table(&self) -> KernelTable {
        KernelTable::new(self)
    }
}

/// Cubic-spline interpolant of a kernel profile with a power tail grafted
/// beyond the window.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub s: f64,
    pub n: usize,
    h: f64,
    f: Vec<f64>,
    m2: Vec<f64>,
    pub r_max: f64,
    /// Fitted tail amplitude: `F(r) = tail_c r^{−(N+2s)}` for `r > r_max`.
    pub tail_c: f64,
}

impl KernelTable {
    fn new(p: &KernelProfile) -> Self {
        let h = p.r[1] - p.r[0];
        let f = p.f.clone();
        let len = f.len();
        let q = p.n as f64 + 2.0 * p.s;
        // clamped spline: F'(0) = 0, F'(r_max) from the power tail
        let r_max = p.r[len - 1];
        let dend = -q * f[len - 1] / r_max;
        let m2 = clamped_spline(&f, h, 0.0, dend);
        KernelTable { s: p.s, n: p.n, h, tail_c: f[len - 1] * r_max.powf(q), f, m2, r_max }
    }

    /// `F(r)` for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return self.tail_c * r.powf(-(self.n as f64 + 2.0 * self.s));
        }
        let j = ((r / self.h) as usize).min(self.f.len() - 2);
        let a = (j as f64 + 1.0) - r / self.h;
        let b = 1.0 - a;
        let h2 = self.h * self.h / 6.0;
        a * self.f[j] + b * self.f[j + 1] + ((a * a * a - a) * self.m2[j] + (b * b * b - b) * self.m2[j + 1]) * h2
    }
}

/// Second derivatives of the clamped cubic spline through equispaced `y`.
fn clamped_spline(y: &[f64], h: f64, d0: f64, d1: f64) -> Vec<f64> {
    let n = y.len();
    let mut sub = vec![h / 6.0; n];
    let mut dia = vec![2.0 * h / 3.0; n];
    let mut sup = vec![h / 6.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        rhs[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
    }
    dia[0] = h / 3.0;
    rhs[0] = (y[1] - y[0]) / h - d0;
    dia[n - 1] = h / 3.0;
    rhs[n - 1] = d1 - (y[n - 1] - y[n - 2]) / h;
    sub[0] = 0.0;
    sup[n - 1] = 0.0;
    crate::grid_solver::thomas(&sub, &mut dia, &sup, &mut rhs);
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic() {
        let h = 0.1;
        let f = |x: f64| 1.0 - x * x * x + 0.5 * x * x;
        let df = |x: f64| -3.0 * x * x + x;
        let y: Vec<f64> = (0..=30).map(|j| f(j as f64 * h)).collect();
        let m2 = clamped_spline(&y, h, df(0.0), df(3.0));
        for (j, m) in m2.iter().enumerate() {
            let x = j as f64 * h;
            assert!((m - (-6.0 * x + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_coarse_padding() {
        let g = KernelGrid { h: 0.1, size: 1 << 10, window: 50.0 };
        assert!(matches!(kernel(0.3, 1, &g), Err(Error::Resolution(_))));
    }
}
