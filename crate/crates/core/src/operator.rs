//! The collar model operator and residual measurement.
//!
//! P = (x²D_x)² + i x³ D_x + x² D_y² + V₀(y) + x V₁(y).
//!
//! In s = log x this is exactly P = −x²(∂_ss + ∂_yy) + V₀ + xV₁ — no
//! truncation error beyond the stencils — which is why the grid is
//! log-uniform in x. x-derivatives use 5-point 4th-order stencils, the
//! periodic y-direction is differentiated spectrally.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::boundary::BoundaryData;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::CollarGrid;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

pub struct ModelOperator {
    pub b: BoundaryData,
    pub lambda: f64,
    plans: RefCell<HashMap<usize, PlanPair>>,
}

impl ModelOperator {
    pub fn new(b: &BoundaryData, lambda: f64) -> Self {
        ModelOperator {
            b: b.clone(),
            lambda,
            plans: RefCell::new(HashMap::new()),
        }
    }

    fn plans_for(&self, ny: usize) -> PlanPair {
        let mut cache = self.plans.borrow_mut();
        cache
            .entry(ny)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (
                    planner.plan_fft_forward(ny),
                    planner.plan_fft_inverse(ny),
                )
            })
            .clone()
    }

    /// Spectral u_yy of one shell, in place. omega0 = 2π / circumference.
    pub(crate) fn d2y_shell(&self, row: &mut [Complex64], omega0: f64) {
        let ny = row.len();
        let (fwd, inv) = self.plans_for(ny);
        fwd.process(row);
        let scale = 1.0 / ny as f64;
        for (k, v) in row.iter_mut().enumerate() {
            let ke = if k <= ny / 2 {
                k as f64
            } else {
                k as f64 - ny as f64
            };
            let w = ke * omega0;
            *v *= -w * w * scale;
        }
        inv.process(row);
    }

    /// (P − λ)u on all rows where the 5-point s-stencil fits
    /// (2 ≤ i ≤ nx−3); the two outermost rows on each side are zero and
    /// must be excluded from any norm.
    pub fn apply(&self, u: &CollarGrid) -> CollarGrid {
        let (nx, ny) = (u.nx(), u.ny());
        let ds = u.ds();
        let omega0 = std::f64::consts::TAU / u.b.circumference;
        let v0: Vec<f64> = u.y.iter().map(|&y| self.b.v0(y)).collect();
        let v1: Vec<f64> = u.y.iter().map(|&y| self.b.v1(y)).collect();
        let mut out = u.zero_like();
        let inv12ds2 = 1.0 / (12.0 * ds * ds);
        let mut yy = vec![Complex64::new(0.0, 0.0); ny];
        for i in 2..nx.saturating_sub(2) {
            let x = u.x[i];
            let x2 = x * x;
            yy.copy_from_slice(u.shell(i));
            self.d2y_shell(&mut yy, omega0);
            let row = &mut out.values[i * ny..(i + 1) * ny];
            for j in 0..ny {
                // [-1, 16, -30, 16, -1]/(12 ds²)
                let uss = (-u.at(i - 2, j) + u.at(i - 1, j) * 16.0 - u.at(i, j) * 30.0
                    + u.at(i + 1, j) * 16.0
                    - u.at(i + 2, j))
                    * inv12ds2;
                let pot = v0[j] + x * v1[j] - self.lambda;
                row[j] = (uss + yy[j]) * (-x2) + u.at(i, j) * pot;
            }
        }
        out
    }
}

/// Least-squares slope of log(norm) vs log(x) with a 95% halfwidth.
pub fn fit_loglog(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    assert!(pts.len() >= 3, "need at least 3 points for a slope fit");
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| {
            let fit = my + slope * (a - mx);
            (b - fit) * (b - fit)
        })
        .sum();
    let dof = (pts.len().max(3) - 2) as f64;
    let stderr = (rss / dof / sxx).sqrt();
    (slope, 1.96 * stderr)
}

#[derive(Debug, Clone)]
pub struct ResidualOptions {
    /// fit window in x
    pub fit_lo: f64,
    pub fit_hi: f64,
    /// measure the shell norms only over |y − y_center| ≤ y_halfwidth
    pub y_center: Option<f64>,
    pub y_halfwidth: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            fit_lo: 0.0,
            fit_hi: f64::INFINITY,
            y_center: None,
            y_halfwidth: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// (x, rms of |(P−λ)u| over the y-window) for every interior shell
    pub shells: Vec<(f64, f64)>,
    pub slope: f64,
    pub slope_halfwidth: f64,
    pub fit_range: (f64, f64),
}

/// Per-shell residual norms and a fitted log-log decay slope.
///
/// The fit window must resolve the fastest phase e^{iν̃_max/x}: at least
/// cfg.min_ppw grid points per oscillation at every shell in the window
/// (points per wavelength = 2πx/(ν̃_max·ds)).
pub fn residual(
    op: &ModelOperator,
    field: &CollarGrid,
    opts: &ResidualOptions,
    cfg: &Config,
) -> Result<ResidualReport> {
    let (nx, ny) = (field.nx(), field.ny());
    if nx < 7 {
        return Err(Error::GridTooCoarse("need at least 7 x-shells".into()));
    }
    let v0_min = field
        .y
        .iter()
        .map(|&y| field.b.v0(y))
        .fold(f64::INFINITY, f64::min);
    let nu_max = (field.lambda - v0_min).max(0.0).sqrt();
    let ds = field.ds();
    let fit_lo = opts.fit_lo.max(field.x[2]);
    let fit_hi = opts.fit_hi.min(field.x[nx - 3]);
    if nu_max > 0.0 {
        let ppw_min = std::f64::consts::TAU * fit_lo / (nu_max * ds);
        if ppw_min < cfg.min_ppw {
            return Err(Error::UnresolvedOscillation {
                got: ppw_min,
                required: cfg.min_ppw,
            });
        }
    }
    let circ = field.b.circumference;
    let in_window = |y: f64| -> bool {
        match opts.y_center {
            None => true,
            Some(c) => {
                let mut d = (y - c).abs() % circ;
                if d > circ / 2.0 {
                    d = circ - d;
                }
                d <= opts.y_halfwidth
            }
        }
    };
    let cols: Vec<usize> = (0..ny).filter(|&j| in_window(field.y[j])).collect();
    if cols.is_empty() {
        return Err(Error::Invalid("empty y-window".into()));
    }
    let res = op.apply(field);
    let mut shells = Vec::new();
    for i in 2..nx - 2 {
        let row = res.shell(i);
        let ms: f64 = cols.iter().map(|&j| row[j].norm_sqr()).sum::<f64>() / cols.len() as f64;
        shells.push((field.x[i], ms.sqrt()));
    }
    let fit_pts: Vec<(f64, f64)> = shells
        .iter()
        .filter(|(x, r)| *x >= fit_lo && *x <= fit_hi && *r > 0.0)
        .cloned()
        .collect();
    if fit_pts.len() < 3 {
        return Err(Error::InsufficientRange {
            needed: fit_lo,
            got: fit_hi,
        });
    }
    let (slope, hw) = fit_loglog(&fit_pts);
    Ok(ResidualReport {
        shells,
        slope,
        slope_halfwidth: hw,
        fit_range: (fit_lo, fit_hi),
    })
}
