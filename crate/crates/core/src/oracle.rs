//! Brute-force resolvent on the collar slab [x_min, x_max] × circle.
//!
//! The operator P − λ − i·damp(x) is discretized with 4th-order stencils in
//! s = log x and spectral differentiation in periodic y, then solved
//! iteratively. Infinity is x → 0: a small global damping ε keeps the system
//! uniformly invertible, and a smooth absorbing ramp below `x_abs` soaks up
//! outgoing waves before they reach the artificial cut at x_min, so the slab
//! behaves like the full collar. The ε → 0 limit is approached by solving at
//! several ε and extrapolating (`eps_continuation`), never by setting ε = 0.
//!
//! Everything downstream — frequency maps, decay fits, trace extraction —
//! reads the field only on x ≥ x_abs, where the grid is required to resolve
//! the fastest oscillation exp(iν̃_max/x).

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::grid::CollarGrid;
use crate::linalg::{gmres, norm2, BandedLu};
use crate::operator::fit_loglog;

/// Absorbing ramp width in decades of x: full strength one decade below x_abs.
const RAMP_DECADES: f64 = 1.0;
/// Resample length for one frequency-analysis block.
const FREQ_SAMPLES: usize = 256;
/// Each frequency block spans this factor in x; consecutive block centers
/// differ by its square root (50% overlap in log x).
const FREQ_SPAN: f64 = 3.0;
/// Most blocks a frequency map will use.
const FREQ_MAX_BLOCKS: usize = 6;
/// Grid points across the narrowest stationary-phase ridge, whose width at
/// the bottom of the diagnostic region is ~ sqrt(2·x_abs / ν̃Δr).
const RIDGE_PPW: f64 = 5.0;
/// Decades of x a decay fit needs between the absorber and the source.
const DECAY_DECADES: f64 = 1.0;
/// A field whose maximum is below this carries nothing measurable.
const DEAD_FIELD: f64 = 1e-200;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// x-range of the slab; infinity is x → 0.
    pub x_min: f64,
    pub x_max: f64,
    /// Shells in x; 0 = pick from the points-per-wavelength rule.
    pub nx: usize,
    /// Nodes in y; 0 = pick from the ridge-resolution rule.
    pub ny: usize,
    /// Global damping; 0 = default 1e-2·|λ|.
    pub eps: f64,
    /// The absorbing ramp switches on below this x.
    pub x_abs: f64,
    /// Absorber amplitude in units of (λ − min V₀).
    pub absorber_strength: f64,
    /// Relative residual at which the iterative solve stops.
    pub solver_tol: f64,
    pub max_iter: usize,
    /// Krylov restart length. Memory is (restart+2)·nx·ny·16 bytes.
    pub restart: usize,
    /// Minimum resolved points per oscillation of exp(iν̃_max/x) at x_abs.
    pub min_ppw: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            x_min: 1e-3,
            x_max: 1.0,
            nx: 0,
            ny: 0,
            eps: 0.0,
            x_abs: 8e-3,
            absorber_strength: 2.0,
            solver_tol: 1e-8,
            max_iter: 4000,
            restart: 30,
            min_ppw: 8.0,
        }
    }
}

impl OracleConfig {
    /// Fill the auto fields (nx, ny, eps) for a concrete problem.
    ///
    /// nx: exp(iν̃_max/x) has local wavelength 2πx/ν̃ in s = log x, smallest
    /// at small x; keep min_ppw points per wavelength down to x_abs (below
    /// that the absorber owns the field). ny: the sharpest y-feature of a
    /// resolvent field is a stationary-phase ridge of width
    /// sqrt(2x/ν̃Δr) ≥ sqrt(2x)/(ν̃² + 2·max|V₀″|)^{1/4}; resolve it at
    /// x_abs with RIDGE_PPW points. The rule is meaningless for potentials
    /// without saddles (constant calibration problems) — set ny explicitly
    /// there.
    pub fn resolved(&self, b: &BoundaryData, lambda: f64) -> OracleConfig {
        let mut cfg = self.clone();
        let (v0_min, h_max) = scan_potential(b);
        let nu2 = (lambda - v0_min).max(0.25);
        if cfg.nx == 0 {
            let ds = TAU * cfg.x_abs / (nu2.sqrt() * cfg.min_ppw);
            cfg.nx = ((cfg.x_max / cfg.x_min).ln() / ds).ceil() as usize + 1;
        }
        if cfg.ny == 0 {
            let ridge = (2.0 * cfg.x_abs / (nu2 + 2.0 * h_max).sqrt().max(1.0)).sqrt();
            let n = (RIDGE_PPW * b.circumference / ridge).ceil() as usize;
            cfg.ny = smooth_size(n.max(48));
        }
        if cfg.eps == 0.0 {
            cfg.eps = (1e-2 * lambda.abs()).max(1e-6);
        }
        cfg
    }

    /// Empty field on the grid this configuration implies.
    pub fn make_grid(&self, b: &BoundaryData, lambda: f64) -> Result<CollarGrid> {
        let r = self.resolved(b, lambda);
        CollarGrid::new(b, lambda, r.x_min, r.x_max, r.nx, r.ny)
    }
}

/// (min V₀, max |V₀″|) over the circle, sampled densely (the data is a
/// finite Fourier series, so 1024 samples saturate).
fn scan_potential(b: &BoundaryData) -> (f64, f64) {
    let n = 1024;
    let mut v_min = f64::INFINITY;
    let mut h_max: f64 = 0.0;
    for i in 0..n {
        let y = b.circumference * i as f64 / n as f64;
        v_min = v_min.min(b.v0(y));
        h_max = h_max.max(b.v0_d(y, 2).abs());
    }
    (v_min, h_max)
}

/// Next size ≥ n with no prime factor above 7 (keeps the y-FFTs fast).
fn smooth_size(mut n: usize) -> usize {
    loop {
        let mut m = n.max(1);
        for p in [2usize, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// C¹ ramp: 0 for t ≤ 0, 1 for t ≥ 1.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Frozen discretization of P − λ − i·damp(x) on a CollarGrid layout.
/// Rows 0 and nx−1 are Dirichlet identity rows; the shells next to them use
/// 3-point second differences, everything else the 5-point 4th-order
/// stencil; y is differentiated spectrally.
struct Discretization {
    nx: usize,
    ny: usize,
    x: Vec<f64>,
    ds: f64,
    omega0: f64,
    lambda: f64,
    v0: Vec<f64>,
    v1: Vec<f64>,
    v0_mean: f64,
    v1_mean: f64,
    /// ε + absorber amplitude·ramp per shell
    damp: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Discretization {
    fn new(g: &CollarGrid, b: &BoundaryData, lambda: f64, eps: f64, x_abs: f64, amp: f64) -> Self {
        let ny = g.ny();
        let omega0 = TAU / b.circumference;
        let v0: Vec<f64> = g.y.iter().map(|&y| b.v0(y)).collect();
        let v1: Vec<f64> = g.y.iter().map(|&y| b.v1(y)).collect();
        let s_abs = x_abs.ln();
        let ramp_width = RAMP_DECADES * std::f64::consts::LN_10;
        let damp = g
            .x
            .iter()
            .map(|&x| eps + amp * smoothstep((s_abs - x.ln()) / ramp_width))
            .collect();
        let mut planner = FftPlanner::new();
        Discretization {
            nx: g.nx(),
            ny,
            x: g.x.clone(),
            ds: g.ds(),
            omega0,
            lambda,
            v0_mean: v0.iter().sum::<f64>() / ny as f64,
            v1_mean: v1.iter().sum::<f64>() / ny as f64,
            v0,
            v1,
            damp,
            fwd: planner.plan_fft_forward(ny),
            inv: planner.plan_fft_inverse(ny),
        }
    }

    /// out = (P − λ − i·damp) u on the full grid, Dirichlet closures included.
    fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        let c4 = 1.0 / (12.0 * self.ds * self.ds);
        let c2 = 1.0 / (self.ds * self.ds);
        let mut yy = vec![Complex64::new(0.0, 0.0); ny];
        out[..ny].copy_from_slice(&u[..ny]);
        out[(nx - 1) * ny..].copy_from_slice(&u[(nx - 1) * ny..]);
        for i in 1..nx - 1 {
            let x = self.x[i];
            let x2 = x * x;
            yy.copy_from_slice(&u[i * ny..(i + 1) * ny]);
            self.fwd.process(&mut yy);
            for (k, v) in yy.iter_mut().enumerate() {
                let ke = if k <= ny / 2 {
                    k as f64
                } else {
                    k as f64 - ny as f64
                };
                *v *= -(ke * self.omega0).powi(2) / ny as f64;
            }
            self.inv.process(&mut yy);
            let row = &u[i * ny..(i + 1) * ny];
            let damp = Complex64::new(0.0, -self.damp[i]);
            let out_row = &mut out[i * ny..(i + 1) * ny];
            if i >= 2 && i <= nx - 3 {
                let (m2, m1) = (&u[(i - 2) * ny..(i - 1) * ny], &u[(i - 1) * ny..i * ny]);
                let (p1, p2) = (
                    &u[(i + 1) * ny..(i + 2) * ny],
                    &u[(i + 2) * ny..(i + 3) * ny],
                );
                for j in 0..ny {
                    let uss =
                        c4 * (-m2[j] + 16.0 * m1[j] - 30.0 * row[j] + 16.0 * p1[j] - p2[j]);
                    let pot = self.v0[j] + x * self.v1[j] - self.lambda;
                    out_row[j] = -x2 * (uss + yy[j]) + (Complex64::new(pot, 0.0) + damp) * row[j];
                }
            } else {
                let (m1, p1) = (&u[(i - 1) * ny..i * ny], &u[(i + 1) * ny..(i + 2) * ny]);
                for j in 0..ny {
                    let uss = c2 * (m1[j] - 2.0 * row[j] + p1[j]);
                    let pot = self.v0[j] + x * self.v1[j] - self.lambda;
                    out_row[j] = -x2 * (uss + yy[j]) + (Complex64::new(pot, 0.0) + damp) * row[j];
                }
            }
        }
    }

    /// Banded LU of the y-averaged symbol for one Fourier mode: the
    /// preconditioner solves these independently per mode. Same stencils and
    /// boundary rows as `apply`, with V₀, V₁ replaced by their y-means.
    fn mode_lu(&self, k: usize) -> Result<BandedLu> {
        let (nx, ny) = (self.nx, self.ny);
        let ke = if k <= ny / 2 {
            k as f64
        } else {
            k as f64 - ny as f64
        };
        let ky2 = (ke * self.omega0).powi(2);
        let c4 = 1.0 / (12.0 * self.ds * self.ds);
        let c2 = 1.0 / (self.ds * self.ds);
        BandedLu::factor(nx, 2, 2, |i, j| {
            if i == 0 || i == nx - 1 {
                return Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            }
            let d = j as isize - i as isize;
            let w = if i >= 2 && i <= nx - 3 {
                match d {
                    -2 | 2 => -c4,
                    -1 | 1 => 16.0 * c4,
                    0 => -30.0 * c4,
                    _ => 0.0,
                }
            } else {
                match d {
                    -1 | 1 => c2,
                    0 => -2.0 * c2,
                    _ => 0.0,
                }
            };
            let x = self.x[i];
            let mut v = Complex64::new(-x * x * w, 0.0);
            if d == 0 {
                v += Complex64::new(
                    x * x * ky2 + self.v0_mean + x * self.v1_mean - self.lambda,
                    -self.damp[i],
                );
            }
            v
        })
        .map_err(|e| Error::Invalid(format!("mode-{k} preconditioner: {e}")))
    }
}

/// Local frequency estimate ν̂(x, y): the dominant rate of phase change of u
/// in t = 1/x, measured block-by-block with a Hann-windowed FFT. A purely
/// outgoing oscillation e^{+iν/x} reads as ν̂ ≈ +ν.
#[derive(Debug, Clone)]
pub struct FrequencyMap {
    /// Geometric centers of the analysis blocks, ascending in x.
    pub x: Vec<f64>,
    /// y nodes, copied from the grid.
    pub y: Vec<f64>,
    /// Row-major, y fastest: nu_hat[block·ny + j].
    pub nu_hat: Vec<f64>,
    /// Peak spectral magnitude per cell; ≈0 where there is nothing to measure.
    pub weight: Vec<f64>,
    circumference: f64,
}

impl FrequencyMap {
    fn empty(y: Vec<f64>, circumference: f64) -> Self {
        FrequencyMap {
            x: Vec::new(),
            y,
            nu_hat: Vec::new(),
            weight: Vec::new(),
            circumference,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.x.len()
    }

    pub fn cell(&self, block: usize, j: usize) -> (f64, f64) {
        let idx = block * self.y.len() + j;
        (self.nu_hat[idx], self.weight[idx])
    }

    /// (ν̂, weight) at the strongest cell of a block with y within
    /// `halfwidth` of `y_c` (periodic distance). None if every such cell is
    /// dead.
    pub fn dominant(&self, block: usize, y_c: f64, halfwidth: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (j, &yj) in self.y.iter().enumerate() {
            let mut d = (yj - y_c).rem_euclid(self.circumference);
            d = d.min(self.circumference - d);
            if d > halfwidth {
                continue;
            }
            let (nu, w) = self.cell(block, j);
            if w > DEAD_FIELD && best.map_or(true, |(_, bw)| w > bw) {
                best = Some((nu, w));
            }
        }
        best
    }

    /// Fraction of live cells in a block with ν̂ ≥ nu_min. Cells carrying
    /// less than 1e−9 of the block's peak weight are not counted either way.
    pub fn outgoing_fraction(&self, block: usize, nu_min: f64) -> f64 {
        let ny = self.y.len();
        let cells = &self.nu_hat[block * ny..(block + 1) * ny];
        let weights = &self.weight[block * ny..(block + 1) * ny];
        let peak = weights.iter().cloned().fold(0.0f64, f64::max);
        let floor = (peak * 1e-9).max(DEAD_FIELD);
        let live: Vec<usize> = (0..ny).filter(|&j| weights[j] >= floor).collect();
        if live.is_empty() {
            return 0.0;
        }
        live.iter().filter(|&&j| cells[j] >= nu_min).count() as f64 / live.len() as f64
    }
}

/// 4-point Lagrange interpolation of column j in s = log x.
fn interp_column(g: &CollarGrid, j: usize, s: f64) -> Complex64 {
    let pos = (s - g.x[0].ln()) / g.ds();
    let base = (pos.floor() as isize - 1).clamp(0, g.nx() as isize - 4) as usize;
    let xi = pos - base as f64;
    let mut out = Complex64::new(0.0, 0.0);
    for m in 0..4 {
        let mut w = 1.0;
        for l in 0..4 {
            if l != m {
                w *= (xi - l as f64) / (m as f64 - l as f64);
            }
        }
        out += g.at(base + m, j) * w;
    }
    out
}

/// Measure the local frequency of `g` in t = 1/x over [x_lo, x_hi].
///
/// The range is tiled by blocks spanning a factor FREQ_SPAN in x with 50%
/// overlap in log x. Each block is resampled uniformly in t (where a phase
/// e^{iν/x} has constant frequency ν), Hann-windowed, Fourier transformed,
/// and the peak refined by parabolic interpolation of log magnitudes.
pub fn frequency_map(g: &CollarGrid, x_lo: f64, x_hi: f64) -> FrequencyMap {
    let ny = g.ny();
    let lo = x_lo.max(g.x[0]);
    let hi = x_hi.min(g.x[g.nx() - 1]);
    let mut map = FrequencyMap::empty(g.y.clone(), g.b.circumference);
    if !(hi > lo) {
        return map;
    }
    let half_span = FREQ_SPAN.sqrt();
    // block centers: geometric ladder between lo·√span and hi/√span
    let (c_lo, c_hi) = (lo * half_span, hi / half_span);
    let n_blocks = if c_hi <= c_lo {
        1
    } else {
        (((c_hi / c_lo).ln() / half_span.ln()).round() as usize + 1).min(FREQ_MAX_BLOCKS)
    };
    let n = FREQ_SAMPLES;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for bi in 0..n_blocks {
        let c = if n_blocks == 1 {
            (c_lo * c_hi).sqrt().max(lo * half_span.min(hi / lo))
        } else {
            c_lo * (c_hi / c_lo).powf(bi as f64 / (n_blocks - 1) as f64)
        };
        let (b_lo, b_hi) = ((c / half_span).max(lo), (c * half_span).min(hi));
        let (t0, t1) = (1.0 / b_hi, 1.0 / b_lo);
        let dt = (t1 - t0) / n as f64;
        map.x.push((b_lo * b_hi).sqrt());
        for j in 0..ny {
            for (k, v) in buf.iter_mut().enumerate() {
                let t = t0 + (k as f64 + 0.5) * dt;
                let hann = 0.5 * (1.0 - (TAU * (k as f64 + 0.5) / n as f64).cos());
                *v = interp_column(g, j, (1.0 / t).ln()) * hann;
            }
            fft.process(&mut buf);
            let (mut peak, mut mag) = (0usize, 0.0f64);
            for (q, v) in buf.iter().enumerate() {
                if v.norm() > mag {
                    mag = v.norm();
                    peak = q;
                }
            }
            if mag <= DEAD_FIELD {
                map.nu_hat.push(0.0);
                map.weight.push(0.0);
                continue;
            }
            // parabolic refinement on log magnitudes of the cyclic neighbors
            let lm = |q: usize| buf[q % n].norm().max(mag * 1e-12).ln();
            let (a, b_, c_) = (lm(peak + n - 1), lm(peak), lm(peak + 1));
            let denom = a - 2.0 * b_ + c_;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (a - c_) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let signed = if peak <= n / 2 {
                peak as f64
            } else {
                peak as f64 - n as f64
            };
            map.nu_hat.push(TAU * (signed + delta) / (n as f64 * dt));
            map.weight.push(mag * 2.0 / n as f64);
        }
    }
    map
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub field: CollarGrid,
    /// Human-readable description of the driving data.
    pub rhs_desc: String,
    /// Global damping the system was solved with.
    pub eps: f64,
    pub iterations: usize,
    /// Final relative residual of the discrete system (the solve contract:
    /// ≤ solver_tol, re-verified after the iteration).
    pub residual: f64,
    /// The absorber switches on below this x; diagnostics live above it.
    pub x_abs: f64,
    /// Lowest x carrying source data (x_max for purely ring-driven solves).
    pub src_lo: f64,
    pub freq: FrequencyMap,
}

/// Solve (P − λ − i·damp)u = f with homogeneous Dirichlet closures.
pub fn solve(
    b: &BoundaryData,
    lambda: f64,
    f: &CollarGrid,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    solve_driven(b, lambda, f, None, cfg)
}

/// Like `solve`, but imposes `ring` as the Dirichlet trace on the x_max
/// shell (scattering drives enter here). Values of `f` on the two edge
/// shells are ignored — those rows belong to the boundary conditions.
pub fn solve_driven(
    b: &BoundaryData,
    lambda: f64,
    f: &CollarGrid,
    ring: Option<&[Complex64]>,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    solve_from(b, lambda, f, ring, None, cfg)
}

/// Workhorse behind `solve`/`solve_driven` with an optional warm start
/// (a nearby field, e.g. the previous rung of an ε-ladder).
pub(crate) fn solve_from(
    b: &BoundaryData,
    lambda: f64,
    f: &CollarGrid,
    ring: Option<&[Complex64]>,
    x0: Option<&[Complex64]>,
    cfg: &OracleConfig,
) -> Result<OracleSolution> {
    let (nx, ny) = (f.nx(), f.ny());
    if f.lambda != lambda {
        return Err(Error::MixedEnergy(f.lambda, lambda));
    }
    if (f.b.circumference - b.circumference).abs() > 1e-12 * b.circumference {
        return Err(Error::Invalid(
            "source grid lives on a different boundary circle".into(),
        ));
    }
    if nx < 8 || ny < 4 {
        return Err(Error::Invalid(format!("grid {nx} x {ny} is too small")));
    }
    if let Some(r) = ring {
        if r.len() != ny {
            return Err(Error::Invalid(format!(
                "ring trace has {} values on a {ny}-node circle",
                r.len()
            )));
        }
    }
    if !(cfg.x_abs > f.x[0]) {
        return Err(Error::Invalid(format!(
            "absorber entry x_abs = {:.3e} must sit above x_min = {:.3e}",
            cfg.x_abs, f.x[0]
        )));
    }
    let eps = if cfg.eps > 0.0 {
        cfg.eps
    } else {
        (1e-2 * lambda.abs()).max(1e-6)
    };
    let (v0_min, _) = scan_potential(b);
    let nu_max = (lambda - v0_min).max(0.25).sqrt();
    let ppw = TAU * cfg.x_abs / (nu_max * f.ds());
    if ppw < cfg.min_ppw {
        let need = ((f.x[nx - 1] / f.x[0]).ln() * nu_max * cfg.min_ppw / (TAU * cfg.x_abs)).ceil();
        return Err(Error::ResolutionError(format!(
            "{ppw:.2} points per wavelength at x_abs = {:.3e} for nu_max = {nu_max:.3}, \
             need {}; use nx >= {need}",
            cfg.x_abs, cfg.min_ppw
        )));
    }

    // driving data: interior rows carry f, edge rows carry the Dirichlet data
    let mut rhs = f.values.clone();
    let mut src_lo = f.x[nx - 1];
    let mut n_src = 0usize;
    for i in 1..nx - 1 {
        let live = f.shell(i).iter().any(|v| v.norm() > 0.0);
        if live {
            if f.x[i] < cfg.x_abs {
                return Err(Error::Invalid(format!(
                    "source has support at x = {:.3e}, inside the absorbing region x < {:.3e}",
                    f.x[i], cfg.x_abs
                )));
            }
            src_lo = src_lo.min(f.x[i]);
            n_src += f.shell(i).iter().filter(|v| v.norm() > 0.0).count();
        }
    }
    for v in &mut rhs[..ny] {
        *v = Complex64::new(0.0, 0.0);
    }
    for (j, v) in rhs[(nx - 1) * ny..].iter_mut().enumerate() {
        *v = ring.map_or(Complex64::new(0.0, 0.0), |r| r[j]);
    }
    let rhs_desc = match (n_src, ring.is_some()) {
        (0, false) => "zero source".to_string(),
        (0, true) => "Dirichlet ring drive at x_max".to_string(),
        (n, false) => format!("interior source on {n} cells, x >= {src_lo:.3e}"),
        (n, true) => format!(
            "interior source on {n} cells, x >= {src_lo:.3e}, plus ring drive at x_max"
        ),
    };
    let rhs_norm = norm2(&rhs);
    if !rhs_norm.is_finite() {
        return Err(Error::Invalid("source contains non-finite values".into()));
    }
    if rhs_norm == 0.0 {
        // ε > 0 makes the operator injective: zero data, zero field
        return Ok(OracleSolution {
            field: f.zero_like(),
            rhs_desc,
            eps,
            iterations: 0,
            residual: 0.0,
            x_abs: cfg.x_abs,
            src_lo,
            freq: FrequencyMap::empty(f.y.clone(), b.circumference),
        });
    }

    let amp = cfg.absorber_strength * (lambda - v0_min).max(1.0);
    let disc = Discretization::new(f, b, lambda, eps, cfg.x_abs, amp);
    let lus: Vec<BandedLu> = (0..ny).map(|k| disc.mode_lu(k)).collect::<Result<_>>()?;
    let apply = |u: &[Complex64], out: &mut [Complex64]| disc.apply(u, out);
    let precond = |r: &mut [Complex64]| {
        for i in 0..nx {
            disc.fwd.process(&mut r[i * ny..(i + 1) * ny]);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); nx];
        for (k, lu) in lus.iter().enumerate() {
            for i in 0..nx {
                col[i] = r[i * ny + k];
            }
            lu.solve(&mut col);
            for i in 0..nx {
                r[i * ny + k] = col[i];
            }
        }
        let scale = 1.0 / ny as f64;
        for i in 0..nx {
            let row = &mut r[i * ny..(i + 1) * ny];
            disc.inv.process(row);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    };
    if let Some(v) = x0 {
        if v.len() != rhs.len() {
            return Err(Error::Invalid("warm start has the wrong grid shape".into()));
        }
    }
    let (u, _, iterations) = gmres(
        &apply,
        &precond,
        &rhs,
        x0,
        cfg.solver_tol,
        cfg.restart,
        cfg.max_iter,
    );

    // the residual bound is the contract; re-verify it outside the solver
    let mut tmp = vec![Complex64::new(0.0, 0.0); u.len()];
    disc.apply(&u, &mut tmp);
    for (t, r) in tmp.iter_mut().zip(&rhs) {
        *t = r - *t;
    }
    let residual = norm2(&tmp) / rhs_norm;
    if !(residual <= cfg.solver_tol) {
        return Err(Error::NoConvergence(format!(
            "relative residual {residual:.3e} after {iterations} iterations (cap {}, restart {})",
            cfg.max_iter, cfg.restart
        )));
    }

    let mut field = f.zero_like();
    field.values = u;
    let x_hi_map = src_lo
        .min(0.3 * field.x[nx - 1])
        .max(cfg.x_abs * FREQ_SPAN);
    let freq = frequency_map(&field, cfg.x_abs, x_hi_map);
    Ok(OracleSolution {
        field,
        rhs_desc,
        eps,
        iterations,
        residual,
        x_abs: cfg.x_abs,
        src_lo,
        freq,
    })
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    /// Fitted power p in |u| ~ x^p (p > 0 decays toward x → 0).
    pub exponent: f64,
    /// 1.96σ halfwidth of the fitted slope.
    pub confidence: f64,
    /// x-window the fit used.
    pub window: (f64, f64),
    pub shells: usize,
}

/// Least-squares decay exponent of |u| along the direction y*, fitted on
/// shell maxima over a y-window of the given halfwidth, for
/// x ∈ [x_abs, src_lo/2.5]. The global damping ε steepens the measured
/// slope by roughly ε·⟨1/x⟩/(2ν̃) over the window — run the solve at small ε
/// (or extrapolate) when the exponent itself is the quantity of interest.
pub fn measure_decay(sol: &OracleSolution, y_star: f64, y_halfwidth: f64) -> Result<DecayFit> {
    let g = &sol.field;
    let circ = g.b.circumference;
    let lo = sol.x_abs;
    let hi = sol.src_lo / 2.5;
    let got = if hi > lo { (hi / lo).log10() } else { 0.0 };
    if got < DECAY_DECADES {
        return Err(Error::InsufficientRange {
            needed: DECAY_DECADES,
            got,
        });
    }
    let mut pts = Vec::new();
    for i in 0..g.nx() {
        if g.x[i] < lo || g.x[i] > hi {
            continue;
        }
        let mut m: f64 = 0.0;
        for (j, &yj) in g.y.iter().enumerate() {
            let mut d = (yj - y_star).rem_euclid(circ);
            d = d.min(circ - d);
            if d <= y_halfwidth {
                m = m.max(g.at(i, j).norm());
            }
        }
        pts.push((g.x[i], m));
    }
    let peak = pts.iter().map(|p| p.1).fold(0.0f64, f64::max);
    if peak < DEAD_FIELD || pts.len() < 3 {
        return Err(Error::InsufficientRange {
            needed: DECAY_DECADES,
            got: 0.0,
        });
    }
    // dead shells (identically zero through the window) cannot enter the log fit
    let pts: Vec<(f64, f64)> = pts
        .into_iter()
        .map(|(x, m)| (x, m.max(peak * 1e-300)))
        .collect();
    let (slope, band) = fit_loglog(&pts);
    Ok(DecayFit {
        exponent: slope,
        confidence: band,
        window: (lo, hi),
        shells: pts.len(),
    })
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    /// The damping ladder, as solved (decreasing).
    pub eps: Vec<f64>,
    /// Max-abs Cauchy difference between consecutive fields over x ≥ x_abs.
    pub probe_diffs: Vec<f64>,
    /// Whether the differences decrease monotonically (the healthy case).
    pub monotone: bool,
    /// Linear-in-ε extrapolation of the last two fields, packaged with its
    /// own frequency map so decay fits can run on it directly. Its `eps` is
    /// 0; its iteration stats are those of the smallest-ε solve.
    pub extrapolated: OracleSolution,
}

/// Max-abs difference between two fields over shells with x ≥ x_lo.
fn region_max_diff(a: &CollarGrid, b: &CollarGrid, x_lo: f64) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..a.nx() {
        if a.x[i] < x_lo {
            continue;
        }
        for j in 0..a.ny() {
            m = m.max((a.at(i, j) - b.at(i, j)).norm());
        }
    }
    m
}

/// Emulate the ε → 0 limit: solve on a decreasing damping ladder (each rung
/// warm-started from the previous field), report the Cauchy differences
/// between consecutive fields on the diagnostic region, and extrapolate the
/// final pair linearly in ε. Differences that grow from first to last mean
/// no limit is being approached; differences that shrink but not
/// monotonically are flagged via `monotone`.
pub fn eps_continuation(
    b: &BoundaryData,
    lambda: f64,
    f: &CollarGrid,
    cfg: &OracleConfig,
    eps_list: &[f64],
) -> Result<ContinuationReport> {
    if eps_list.len() < 3 {
        return Err(Error::Invalid(format!(
            "epsilon continuation needs at least 3 values, got {}",
            eps_list.len()
        )));
    }
    for w in eps_list.windows(2) {
        if !(w[1] > 0.0 && w[1] < w[0]) {
            return Err(Error::Invalid(format!(
                "epsilon ladder must be positive and strictly decreasing, got {} -> {}",
                w[0], w[1]
            )));
        }
    }
    let mut probe_diffs = Vec::with_capacity(eps_list.len() - 1);
    let mut prev: Option<CollarGrid> = None;
    let mut last_sol: Option<OracleSolution> = None;
    let mut second_last: Option<CollarGrid> = None;
    for (k, &e) in eps_list.iter().enumerate() {
        let mut c = cfg.clone();
        c.eps = e;
        let sol = solve_from(b, lambda, f, None, prev.as_ref().map(|g| &g.values[..]), &c)?;
        if let Some(pg) = prev.take() {
            probe_diffs.push(region_max_diff(&pg, &sol.field, cfg.x_abs));
            if k == eps_list.len() - 1 {
                second_last = Some(pg);
            }
        }
        prev = Some(sol.field.clone());
        last_sol = Some(sol);
    }
    let first = probe_diffs[0];
    let last = *probe_diffs.last().unwrap();
    if last > first {
        return Err(Error::NoLimit(format!(
            "probe differences grow along the ladder: {first:.3e} -> {last:.3e}"
        )));
    }
    let monotone = probe_diffs.windows(2).all(|w| w[1] <= w[0]);
    let mut extrapolated = last_sol.expect("ladder has at least one rung");
    let g1 = second_last.expect("ladder has at least two rungs");
    let (e1, e2) = (eps_list[eps_list.len() - 2], eps_list[eps_list.len() - 1]);
    // u(ε) ≈ u0 + c·ε on the last pair: u0 = u2 + (u2 − u1)·ε2/(ε1 − ε2)
    let w = e2 / (e1 - e2);
    for (v, b_) in extrapolated.field.values.iter_mut().zip(g1.values.iter()) {
        *v = *v + (*v - b_) * w;
    }
    extrapolated.eps = 0.0;
    extrapolated.rhs_desc = format!("{} (extrapolated to eps = 0)", extrapolated.rhs_desc);
    let x_hi_map = extrapolated
        .src_lo
        .min(0.3 * extrapolated.field.x[extrapolated.field.nx() - 1])
        .max(cfg.x_abs * FREQ_SPAN);
    extrapolated.freq = frequency_map(&extrapolated.field, cfg.x_abs, x_hi_map);
    Ok(ContinuationReport {
        eps: eps_list.to_vec(),
        probe_diffs,
        monotone,
        extrapolated,
    })
}
