//! Special functions used by normalizations and tail constants.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Surface area of the unit sphere in R^N; `omega(1) = 2`.
pub fn omega(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

pub fn ln_omega(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Normalization of the fractional Laplacian so that its symbol is |xi|^{2s}.
pub fn frac_constant(n: usize, s: f64) -> f64 {
    let h = n as f64 / 2.0;
    4f64.powf(s) * gamma(h + s) / (PI.powf(h) * gamma(-s).abs())
}

/// Leading coefficient of the power tail of the fractional heat kernel,
/// `F(y) ~ tail_constant(n, s) |y|^{-(n+2s)}`.
pub fn frac_tail_constant(n: usize, s: f64) -> f64 {
    let h = n as f64 / 2.0;
    4f64.powf(s) * gamma(h + s) * gamma(1.0 + s) * (PI * s).sin() / PI.powf(h + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(omega(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(omega(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(omega(3), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(ln_omega(5).exp(), omega(5), max_relative = 1e-14);
    }

    #[test]
    fn frac_constant_half() {
        // c_{1,1/2} = 1/pi
        assert_relative_eq!(frac_constant(1, 0.5), 1.0 / PI, max_relative = 1e-13);
        // 1D tail of the Poisson kernel is 1/pi
        assert_relative_eq!(frac_tail_constant(1, 0.5), 1.0 / PI, max_relative = 1e-13);
        // 2D Poisson kernel (1/2pi)(1+r^2)^{-3/2} has tail 1/(2pi)
        assert_relative_eq!(frac_tail_constant(2, 0.5), 0.5 / PI, max_relative = 1e-13);
    }
}
