//! Transport solver for the model equation
//!
//! ```text
//! -2 nu_t (x d/dx + r (y - y_center) d/dy) v = f
//! ```
//!
//! by integrating along characteristics, which are the curves
//! (y - y_center) x^{-r} = const:
//!
//! ```text
//! v(x, y) = -(2 nu_t)^{-1} Int_{x0}^{x} f(t, xi(t)) dt/t + v(x0, xi(x0)),
//! xi(t) = y_center + (y - y_center) (x/t)^{-r}.
//! ```
//!
//! Boundary data at x0 is a closure, so it is evaluated exactly; the forcing
//! lives on a collar grid and is interpolated bicubically (periodic cubic in
//! y, clamped cubic in log x). The integral is composite 4-point
//! Gauss-Legendre, one panel per grid interval, so the quadrature error is
//! dominated by the interpolation: O(ds^4 + dy^4).
//!
//! With a y-window the equation is posed on offsets (lo, hi) around y_center
//! instead of the full circle. |xi - y_center| is monotone in t, so a
//! characteristic escapes the window iff one of its endpoints does; targets
//! whose own offset is outside the window are left zero.

use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::CollarGrid;

const GAUSS4_NODES: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.34785484513745385,
    0.6521451548625461,
    0.6521451548625461,
    0.34785484513745385,
];

/// Beyond this growth of the label range y x^{-r} across the grid, the
/// shared-label resampling would need too wide a label grid; fall back to
/// direct per-target quadrature.
const LABEL_RANGE_FACTOR_MAX: f64 = 8.0;

/// Bicubic interpolation of the grid field: periodic cubic in y, cubic in
/// s = log x on a stencil clamped to the grid.
fn interp_sy(f: &CollarGrid, s: f64, y: f64) -> Complex64 {
    let nx = f.nx();
    let s0 = f.x[0].ln();
    let p = (s - s0) / f.ds();
    let i0 = (p.floor() as isize - 1).clamp(0, nx as isize - 4) as usize;
    let u = p - i0 as f64;
    let mut w = [0.0f64; 4];
    for (l, wl) in w.iter_mut().enumerate() {
        let mut prod = 1.0;
        for q in 0..4 {
            if q != l {
                prod *= (u - q as f64) / (l as f64 - q as f64);
            }
        }
        *wl = prod;
    }
    (0..4)
        .map(|l| f.interp_y(i0 + l, y) * w[l])
        .sum()
}

fn offset_from(y: f64, y_center: f64, circ: f64) -> f64 {
    let mut d = (y - y_center) % circ;
    if d > circ / 2.0 {
        d -= circ;
    }
    if d < -circ / 2.0 {
        d += circ;
    }
    d
}

struct Task<'a> {
    f: &'a CollarGrid,
    r: f64,
    y_center: f64,
    i0: usize,
    window: Option<(f64, f64)>,
}

impl Task<'_> {
    fn in_window(&self, eta: f64) -> bool {
        match self.window {
            None => true,
            Some((lo, hi)) => eta >= lo && eta <= hi,
        }
    }

    /// Characteristic integral for one target: log-x position si, offset eta.
    /// Panels run over the grid intervals between shell i0 and si (signed).
    fn integrate_direct(&self, si: f64, eta: f64) -> Complex64 {
        let s_grid0 = self.f.x[0].ln();
        let ds = self.f.ds();
        let s_anchor = s_grid0 + self.i0 as f64 * ds;
        let mut total = Complex64::new(0.0, 0.0);
        let n_panel = ((si - s_anchor) / ds).abs().round() as usize;
        let dir = if si >= s_anchor { 1.0 } else { -1.0 };
        for p in 0..n_panel {
            let a = s_anchor + dir * p as f64 * ds;
            let b = a + dir * ds;
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (node, weight) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
                let s = mid + half * node;
                let y = self.y_center + eta * (-self.r * (si - s)).exp();
                total += interp_sy(self.f, s, y) * (weight * half);
            }
        }
        total
    }
}

/// Solve the transport equation on the grid of `f`, anchored at the shell
/// nearest x0 where `data` gives v(x0, y) exactly. `y_window` is in offsets
/// from y_center; without it the y-argument wraps periodically. In window
/// mode the forcing should be filled a few grid cells past the window edges:
/// interpolation stencils of edge characteristics reach slightly outside.
pub fn transport_solve(
    f: &CollarGrid,
    nu_t: f64,
    r: f64,
    y_center: f64,
    x0: f64,
    data: &dyn Fn(f64) -> Complex64,
    y_window: Option<(f64, f64)>,
    cfg: &Config,
) -> Result<CollarGrid> {
    solve_impl(f, nu_t, r, y_center, x0, data, y_window, cfg, false)
}

#[allow(clippy::too_many_arguments)]
fn solve_impl(
    f: &CollarGrid,
    nu_t: f64,
    r: f64,
    y_center: f64,
    x0: f64,
    data: &dyn Fn(f64) -> Complex64,
    y_window: Option<(f64, f64)>,
    _cfg: &Config,
    force_direct: bool,
) -> Result<CollarGrid> {
    if nu_t == 0.0 || !nu_t.is_finite() {
        return Err(Error::Invalid(format!("nu_t = {nu_t} must be nonzero")));
    }
    if let Some((lo, hi)) = y_window {
        if !(lo < hi) {
            return Err(Error::Invalid(format!("empty y-window ({lo}, {hi})")));
        }
    }
    if x0 < f.x[0] * 0.999 || x0 > f.x[f.nx() - 1] * 1.001 {
        return Err(Error::Invalid(format!(
            "anchor x0 = {x0} outside the grid [{}, {}]",
            f.x[0],
            f.x[f.nx() - 1]
        )));
    }
    let i0 = f.shell_index(x0);
    let task = Task {
        f,
        r,
        y_center,
        i0,
        window: y_window,
    };

    let (nx, ny) = (f.nx(), f.ny());
    let circ = f.b.circumference;
    let s_vals: Vec<f64> = f.x.iter().map(|x| x.ln()).collect();
    let s_anchor = s_vals[i0];

    // Escape pre-check and the boundary pullback are shared by both paths:
    // |offset| along a characteristic is monotone in s, so checking the two
    // endpoints (target offset, anchor offset) covers the whole segment.
    let mut v = f.zero_like();
    let mut boundary_term = vec![Complex64::new(0.0, 0.0); nx * ny];
    let mut active = vec![false; nx * ny];
    for i in 0..nx {
        let stretch = (-r * (s_vals[i] - s_anchor)).exp();
        for j in 0..ny {
            let eta = offset_from(f.y[j], y_center, circ);
            if !task.in_window(eta) {
                continue; // outside the posed domain: left zero
            }
            let eta_b = eta * stretch;
            if !task.in_window(eta_b) {
                return Err(Error::CharacteristicEscape {
                    y: y_center + eta_b,
                    t: x0,
                });
            }
            active[i * ny + j] = true;
            boundary_term[i * ny + j] = data(y_center + eta_b);
        }
    }

    // Label range across the grid decides the integration strategy.
    let stretch_max = s_vals
        .iter()
        .map(|&s| (-r * (s - s_anchor)).exp())
        .fold(0.0f64, f64::max);
    let use_labels = !force_direct && stretch_max <= LABEL_RANGE_FACTOR_MAX;

    if use_labels {
        // Shared-label path: cumulative integrals H_k(s) = Int_{s0}^{s} of
        // f along the characteristic with label w_k (offset = w_k e^{r s},
        // normalized so that w = offset at the anchor shell), advanced one
        // grid panel at a time, then interpolated in the label per target.
        let w_max = circ / 2.0 * stretch_max;
        let dw = f.dy() / 2.0;
        let nw = (2.0 * w_max / dw).ceil() as usize + 4;
        let w0 = -w_max - 1.5 * dw;
        let labels: Vec<f64> = (0..nw).map(|k| w0 + k as f64 * dw).collect();

        let eval_col = |s: f64, h: &mut Vec<Complex64>| {
            for (k, hk) in h.iter_mut().enumerate() {
                let y = y_center + labels[k] * (r * (s - s_anchor)).exp();
                *hk = interp_sy(f, s, y);
            }
        };
        // H[i][k], built upward from i0 then downward from i0.
        let mut h_all = vec![vec![Complex64::new(0.0, 0.0); nw]; nx];
        let mut g = vec![Complex64::new(0.0, 0.0); nw];
        for dir in [1isize, -1] {
            let mut i = i0 as isize;
            loop {
                let next = i + dir;
                if next < 0 || next >= nx as isize {
                    break;
                }
                let (a, b) = (s_vals[i as usize], s_vals[next as usize]);
                let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
                let mut panel = vec![Complex64::new(0.0, 0.0); nw];
                for (node, weight) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
                    eval_col(mid + half * node, &mut g);
                    for k in 0..nw {
                        panel[k] += g[k] * (weight * half);
                    }
                }
                for k in 0..nw {
                    h_all[next as usize][k] = h_all[i as usize][k] + panel[k];
                }
                i = next;
            }
        }

        for i in 0..nx {
            let stretch = (-r * (s_vals[i] - s_anchor)).exp();
            for j in 0..ny {
                if !active[i * ny + j] {
                    continue;
                }
                let eta = offset_from(f.y[j], y_center, circ);
                let w = eta * stretch; // label of this target
                let p = (w - w0) / dw;
                let k0 = (p.floor() as isize - 1).clamp(0, nw as isize - 4) as usize;
                let u = p - k0 as f64;
                let mut integral = Complex64::new(0.0, 0.0);
                for l in 0..4 {
                    let mut wl = 1.0;
                    for q in 0..4 {
                        if q != l {
                            wl *= (u - q as f64) / (l as f64 - q as f64);
                        }
                    }
                    integral += h_all[i][k0 + l] * wl;
                }
                v.values[i * ny + j] =
                    boundary_term[i * ny + j] - integral / (2.0 * nu_t);
            }
        }
    } else {
        for i in 0..nx {
            for j in 0..ny {
                if !active[i * ny + j] {
                    continue;
                }
                let eta = offset_from(f.y[j], y_center, circ);
                let integral = task.integrate_direct(s_vals[i], eta);
                v.values[i * ny + j] =
                    boundary_term[i * ny + j] - integral / (2.0 * nu_t);
            }
        }
    }
    Ok(v)
}
