//! Radial grids and sampled fields.

use crate::error::{validation, Result};
use crate::special::omega;
use serde::{Deserialize, Serialize};

/// Cell-centred radial grid on the ball `|x| < R` in `R^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    #[serde(rename = "N")]
    pub n: usize,
    pub r_faces: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, r_faces: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(validation("grid dimension must be at least 1"));
        }
        if r_faces.len() < 2 || r_faces[0] != 0.0 {
            return Err(validation("grid needs at least one cell and r_faces[0] = 0"));
        }
        if r_faces.windows(2).any(|w| !(w[1] > w[0])) || !r_faces.iter().all(|r| r.is_finite()) {
            return Err(validation("grid faces must be finite and strictly increasing"));
        }
        Ok(RadialGrid { n, r_faces })
    }

    pub fn uniform(n: usize, radius: f64, cells: usize) -> Result<Self> {
        if !(radius > 0.0) || cells == 0 {
            return Err(validation("uniform grid needs R > 0 and at least one cell"));
        }
        let h = radius / cells as f64;
        let mut faces: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        faces[cells] = radius;
        Self::new(n, faces)
    }

    /// Uniform spacing `h` on `[0, core]`, then cells growing geometrically by
    /// `growth` (capped at `max_h`) until `radius`; the last cell is stretched to land on `radius`.
    pub fn stretched(n: usize, radius: f64, core: f64, h: f64, growth: f64, max_h: f64) -> Result<Self> {
        if !(h > 0.0 && core >= 0.0 && radius > core && growth >= 1.0 && max_h >= h) {
            return Err(validation("stretched grid needs 0 <= core < R, h > 0, growth >= 1, max_h >= h"));
        }
        let mut faces = vec![0.0];
        let mut r = 0.0;
        let mut dh = h;
        while r < radius - 1e-12 {
            if r >= core {
                dh = (dh * growth).min(max_h);
            }
            r += dh;
            faces.push(r);
        }
        let last = faces.len() - 1;
        // fold a sliver of a last cell into its neighbour
        if last >= 2 && radius - faces[last - 1] < 0.5 * (faces[last - 1] - faces[last - 2]) {
            faces.remove(last - 1);
        }
        let last = faces.len() - 1;
        faces[last] = radius;
        Self::new(n, faces)
    }

    pub fn cells(&self) -> usize {
        self.r_faces.len() - 1
    }

    pub fn radius(&self) -> f64 {
        *self.r_faces.last().expect("grid has faces")
    }

    pub fn centers(&self) -> Vec<f64> {
        self.r_faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.r_faces.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Surface measure `ω_N r^{N-1}` at every face.
    pub fn face_areas(&self) -> Vec<f64> {
        let w = omega(self.n);
        self.r_faces.iter().map(|r| w * r.powi(self.n as i32 - 1)).collect()
    }

    /// Cell volumes `ω_N (r_{i+1}^N − r_i^N)/N`.
    pub fn volumes(&self) -> Vec<f64> {
        let w = omega(self.n) / self.n as f64;
        let k = self.n as i32;
        self.r_faces.windows(2).map(|f| w * (f[1].powi(k) - f[0].powi(k))).collect()
    }

    /// Largest cell width.
    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }
}

/// Cell averages of a radial function at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Field { values, time }
    }

    pub fn zeros(cells: usize, time: f64) -> Self {
        Field { values: vec![0.0; cells], time }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `∫ u` over the grid for cell averages.
    pub fn mass(&self, grid: &RadialGrid) -> f64 {
        self.values.iter().zip(grid.volumes()).map(|(u, v)| u * v).sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(crate::Error::Numerical(format!("non-finite value at cell {i}, t = {}", self.time))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn volumes_sum_to_ball() {
        for n in 1..=4 {
            let g = RadialGrid::stretched(n, 7.0, 1.0, 0.05, 1.05, 0.5).unwrap();
            let v: f64 = g.volumes().iter().sum();
            let ball = crate::special::omega(n) / n as f64 * 7f64.powi(n as i32);
            assert_relative_eq!(v, ball, max_relative = 1e-12);
            assert_eq!(g.radius(), 7.0);
        }
        let g = RadialGrid::uniform(3, 2.0, 10).unwrap();
        assert_relative_eq!(g.volumes().iter().sum::<f64>(), 4.0 / 3.0 * PI * 8.0, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_faces() {
        assert!(RadialGrid::new(1, vec![0.0, 1.0, 1.0]).is_err());
        assert!(RadialGrid::new(1, vec![0.1, 1.0]).is_err());
        assert!(RadialGrid::new(0, vec![0.0, 1.0]).is_err());
    }
}
