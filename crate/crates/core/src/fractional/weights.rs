//! One-dimensional quadrature weights for the singular integral
//! `(−Δ)^s f(x) = c_{1,s} ∫_0^∞ G(y) y^{-1-2s} dy`, `G(y) = 2f(x) − f(x+y) − f(x−y)`.
//!
//! With `y = hz` and `H(z) = G(hz)/z²` (smooth, `H(0) = −h² f''(x)`), the integral
//! is `h^{-2s} ∫ H(z) z^{1-2s} dz`. Interpolating `H` with hat functions on the
//! integer nodes and taking `H(0) ≈ G(h)` gives a second-order rule whose weight on
//! `G_k = G(kh)` is
//!
//! * `W_1 = Φ(2) − Φ(1)`,
//! * `W_k = (Φ(k+1) − 2Φ(k) + Φ(k−1)) / k²` for `k ≥ 2`,
//!
//! with `Φ(z) = z^{3-2s} / ((2−2s)(3−2s))`. All weights are positive and
//! `W_k ~ k^{-1-2s}`.

/// Index beyond which the second difference is evaluated by its binomial series.
const SERIES_FROM: usize = 24;
/// Index beyond which tail sums switch to Euler–Maclaurin.
const EM_FROM: usize = 4096;

fn phi(z: f64, s: f64) -> f64 {
    z.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
}

fn phi_prime(z: f64, s: f64) -> f64 {
    z.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
}

/// `W_k` for `k ≥ 1`.
pub fn weight(k: usize, s: f64) -> f64 {
    assert!(k >= 1);
    if k == 1 {
        return phi(2.0, s) - phi(1.0, s);
    }
    let kf = k as f64;
    if k < SERIES_FROM {
        return (phi(kf + 1.0, s) - 2.0 * phi(kf, s) + phi(kf - 1.0, s)) / (kf * kf);
    }
    // Δ²[z^q](k) = 2 Σ_{j≥1} C(q, 2j) k^{q−2j}, and q(q−1) cancels the Φ prefactor.
    let q = 3.0 - 2.0 * s;
    let x = 1.0 / (kf * kf);
    let mut coef = 1.0; // C(q, 2j) / (q(q−1)) at j = 1
    let mut sum = 0.0;
    let mut xp = 1.0;
    for j in 1..40 {
        sum += coef * xp;
        let jf = j as f64;
        coef *= (q - 2.0 * jf) * (q - 2.0 * jf - 1.0) / ((2.0 * jf + 1.0) * (2.0 * jf + 2.0));
        xp *= x;
        if (coef * xp).abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    kf.powf(q - 4.0) * sum
}

/// Continuous extension `W(x) = x^{-1-2s}(1 + c_1 x^{-2} + c_2 x^{-4})` used for tails.
fn weight_asymptotic(x: f64, s: f64) -> (f64, f64) {
    let q = 3.0 - 2.0 * s;
    let c1 = (q - 2.0) * (q - 3.0) / 12.0;
    let c2 = (q - 2.0) * (q - 3.0) * (q - 4.0) * (q - 5.0) / 360.0;
    let e = -1.0 - 2.0 * s;
    let w = x.powf(e) * (1.0 + c1 / (x * x) + c2 / x.powi(4));
    let dw = x.powf(e - 1.0) * (e + (e - 2.0) * c1 / (x * x) + (e - 4.0) * c2 / x.powi(4));
    (w, dw)
}

/// `Σ_{k ≥ K} W_k` for `K ≥ EM_FROM`, by Euler–Maclaurin on the asymptotic form.
fn tail_from(kk: usize, s: f64) -> f64 {
    let q = 3.0 - 2.0 * s;
    let c1 = (q - 2.0) * (q - 3.0) / 12.0;
    let c2 = (q - 2.0) * (q - 3.0) * (q - 4.0) * (q - 5.0) / 360.0;
    let x = kk as f64;
    let two_s = 2.0 * s;
    let integral = x.powf(-two_s) / two_s + c1 * x.powf(-two_s - 2.0) / (two_s + 2.0) + c2 * x.powf(-two_s - 4.0) / (two_s + 4.0);
    let (w, dw) = weight_asymptotic(x, s);
    integral + 0.5 * w - dw / 12.0
}

/// Weights `W_1..W_{len}` plus the complete sum `S = Σ_{k≥1} W_k` and the
/// tail sums `T[K] = Σ_{k≥K} W_k` for `K = 1..=len+1`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub s: f64,
    /// `w[k]` for `k = 0..=len`; `w[0]` is unused and zero.
    pub w: Vec<f64>,
    /// `tail[K]` for `K = 0..=len+1`; `tail[0]` is unused.
    pub tail: Vec<f64>,
}

impl WeightTable {
    pub fn new(s: f64, len: usize) -> Self {
        let big = len.max(EM_FROM);
        let mut w = Vec::with_capacity(big + 1);
        w.push(0.0);
        for k in 1..=big {
            w.push(weight(k, s));
        }
        let mut tail = vec![0.0; big + 2];
        tail[big + 1] = tail_from(big + 1, s);
        for k in (1..=big).rev() {
            tail[k] = tail[k + 1] + w[k];
        }
        w.truncate(len + 1);
        tail.truncate(len + 2);
        WeightTable { s, w, tail }
    }

    /// `S = Σ_{k≥1} W_k`.
    pub fn total(&self) -> f64 {
        self.tail[1]
    }
}

/// Weight of the half hat at the last node `K` of a truncated rule on `[0, K]`:
/// `∫_{K−1}^{K} (z − K + 1) z^{1−2s} dz / K²`.
pub fn end_weight(kk: usize, s: f64) -> f64 {
    let k = kk as f64;
    if kk == 1 {
        // the hat at 0 and the half hat at 1 both land on G_1
        return phi_prime(1.0, s);
    }
    (phi_prime(k, s) - phi(k, s) + phi(k - 1.0, s)) / (k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn series_matches_direct_difference() {
        for s in [0.2, 0.5, 0.8] {
            let k = SERIES_FROM;
            let kf = k as f64;
            let direct = (phi(kf + 1.0, s) - 2.0 * phi(kf, s) + phi(kf - 1.0, s)) / (kf * kf);
            assert_relative_eq!(weight(k, s), direct, max_relative = 1e-11);
        }
    }

    #[test]
    fn tail_sum_consistent() {
        let s = 0.35;
        let t = WeightTable::new(s, 100);
        // brute-force partial sum up to 2e6 plus asymptotic remainder
        let brute: f64 = (1..2_000_000).map(|k| weight(k, s)).sum::<f64>() + tail_from(2_000_000, s);
        assert_relative_eq!(t.total(), brute, max_relative = 1e-10);
        assert!(t.w[1..].iter().all(|w| *w > 0.0));
    }

    #[test]
    fn asymptotic_form_matches() {
        let s = 0.7;
        let k = 5000usize;
        assert_relative_eq!(weight(k, s), weight_asymptotic(k as f64, s).0, max_relative = 1e-12);
    }
}
