//! Collar grid: log-uniform in x on (0, x_max], uniform periodic in y.
//!
//! Field values are complex, stored row-major with y fastest, one row per
//! x-shell. The grid carries the boundary data and the energy so that every
//! field knows which operator it belongs to.

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CollarGrid {
    /// ascending, log-uniform
    pub x: Vec<f64>,
    /// ascending, uniform, period = circumference (no duplicate endpoint)
    pub y: Vec<f64>,
    pub b: BoundaryData,
    pub lambda: f64,
    /// row-major, y fastest: values[i * ny + j] = u(x[i], y[j])
    pub values: Vec<Complex64>,
}

impl CollarGrid {
    pub fn new(
        b: &BoundaryData,
        lambda: f64,
        x_min: f64,
        x_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if !(x_min > 0.0 && x_min < x_max) || nx < 2 || ny < 2 {
            return Err(Error::Invalid(format!(
                "bad grid spec: x in [{x_min}, {x_max}], {nx} x {ny}"
            )));
        }
        let (s0, s1) = (x_min.ln(), x_max.ln());
        let ds = (s1 - s0) / (nx - 1) as f64;
        let x = (0..nx).map(|i| (s0 + i as f64 * ds).exp()).collect();
        let circ = b.circumference;
        let dy = circ / ny as f64;
        let y = (0..ny).map(|j| j as f64 * dy).collect();
        Ok(CollarGrid {
            x,
            y,
            b: b.clone(),
            lambda,
            values: vec![Complex64::new(0.0, 0.0); nx * ny],
        })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    /// log-x spacing (uniform by construction)
    pub fn ds(&self) -> f64 {
        (self.x[1] / self.x[0]).ln()
    }

    pub fn dy(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.ny() + j]
    }

    pub fn shell(&self, i: usize) -> &[Complex64] {
        let ny = self.ny();
        &self.values[i * ny..(i + 1) * ny]
    }

    pub fn shell_mut(&mut self, i: usize) -> &mut [Complex64] {
        let ny = self.ny();
        &mut self.values[i * ny..(i + 1) * ny]
    }

    /// Fill the field from a pointwise function of (x, y).
    pub fn fill(&mut self, mut f: impl FnMut(f64, f64) -> Complex64) {
        let ny = self.ny();
        for i in 0..self.nx() {
            let xi = self.x[i];
            for j in 0..ny {
                self.values[i * ny + j] = f(xi, self.y[j]);
            }
        }
    }

    /// Same shape, zero values.
    pub fn zero_like(&self) -> CollarGrid {
        CollarGrid {
            x: self.x.clone(),
            y: self.y.clone(),
            b: self.b.clone(),
            lambda: self.lambda,
            values: vec![Complex64::new(0.0, 0.0); self.values.len()],
        }
    }

    /// Index of the x-shell nearest to the given x.
    pub fn shell_index(&self, x: f64) -> usize {
        let s0 = self.x[0].ln();
        let pos = (x.ln() - s0) / self.ds();
        (pos.round().max(0.0) as usize).min(self.nx() - 1)
    }

    /// Wrap y into [0, circumference) and return (floor index, fraction).
    pub fn y_locate(&self, y: f64) -> (usize, f64) {
        let circ = self.b.circumference;
        let mut t = (y % circ) / self.dy();
        if t < 0.0 {
            t += self.ny() as f64;
        }
        let j = t.floor() as usize % self.ny();
        (j, t - t.floor())
    }

    /// Periodic cubic interpolation of the field in y on shell i.
    /// 4-point Lagrange on the uniform grid: O(dy^4).
    pub fn interp_y(&self, i: usize, y: f64) -> Complex64 {
        let ny = self.ny();
        let (j, t) = self.y_locate(y);
        let jm = (j + ny - 1) % ny;
        let j1 = (j + 1) % ny;
        let j2 = (j + 2) % ny;
        let f = [
            self.at(i, jm),
            self.at(i, j),
            self.at(i, j1),
            self.at(i, j2),
        ];
        // Lagrange weights at nodes -1, 0, 1, 2 for parameter t in [0,1]
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        f[0] * w[0] + f[1] * w[1] + f[2] * w[2] + f[3] * w[3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn grid() -> CollarGrid {
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap();
        CollarGrid::new(&b, 5.0, 1e-3, 1.0, 64, 32).unwrap()
    }

    #[test]
    fn log_uniform_and_periodic() {
        let g = grid();
        assert_eq!(g.nx(), 64);
        assert_eq!(g.ny(), 32);
        assert!((g.x[0] - 1e-3).abs() < 1e-15);
        assert!((g.x[63] - 1.0).abs() < 1e-12);
        let ds = g.ds();
        for i in 1..g.nx() {
            assert!(((g.x[i] / g.x[i - 1]).ln() - ds).abs() < 1e-12);
        }
        // last y node one spacing short of the period
        assert!((g.y[31] + g.dy() - TAU).abs() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        let mut g = grid();
        let idx = g.idx(5, 7);
        g.values[idx] = Complex64::new(2.0, -1.0);
        assert_eq!(g.at(5, 7), Complex64::new(2.0, -1.0));
        assert_eq!(g.shell(5)[7], Complex64::new(2.0, -1.0));
        assert_eq!(g.shell_index(g.x[41]), 41);
    }

    #[test]
    fn cubic_y_interpolation_is_fourth_order() {
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap();
        let f = |y: f64| Complex64::new((2.0 * y).sin(), (y).cos());
        let mut errs = Vec::new();
        for &ny in &[64usize, 128] {
            let mut g = CollarGrid::new(&b, 5.0, 0.1, 1.0, 4, ny).unwrap();
            g.fill(|_, y| f(y));
            let mut emax: f64 = 0.0;
            for k in 0..200 {
                let y = 0.013 + TAU * k as f64 / 200.0;
                emax = emax.max((g.interp_y(0, y) - f(y)).norm());
            }
            errs.push(emax);
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 3.7, "interpolation order {rate}");
    }

    #[test]
    fn y_wraparound() {
        let g = grid();
        let (j, t) = g.y_locate(-0.5 * g.dy());
        assert_eq!(j, g.ny() - 1);
        assert!((t - 0.5).abs() < 1e-12);
    }
}
