//! The boundary pairing of eigenfunction fields and everything built on it:
//! the commutator-flux form, its exact evaluation on mode traces, extraction
//! of traces from grid fields, and biorthogonalization of saddle hierarchies.
//!
//! For a cutoff χ(s) in the log-boundary variable s = log x that rises from 0
//! at the boundary to 1 in the interior, the pairing of two fields is
//!
//! ```text
//!   B(u1, u2) = -i <[P, chi] u1, u2>
//!             =  i ∬ (chi'' u1 + 2 chi' d_s u1) conj(u2) ds dy,
//! ```
//!
//! the x² of the operator cancelling the 1/x² of the volume form. For exact
//! eigenfunctions the value is independent of χ, so it is measured at three
//! geometrically shrinking scales and Richardson-extrapolated; the spread of
//! the extrapolants is the quoted error.
//!
//! On traces at a boundary minimum the same form has a closed evaluation
//! ("mode formula"): with weight ν̃ = √(λ−V(y_c)),
//!
//! ```text
//!   B = 2 ν̃ Σ_j γ¹_j conj(γ²_j)            (center coefficients)
//!   B = 2 ν̃ ∫ p¹(Y) conj(p²(Y)) dY         (sink profiles)
//! ```
//!
//! which is sesquilinear, conjugate-symmetric, and positive definite on
//! outgoing traces. The flux and mode implementations check each other.
//!
//! For a saddle, the pairing of the outgoing models u_n against the incoming
//! models ũ_m vanishes for n > m while the diagonal does not, so the Gram
//! matrix is upper triangular and the incoming hierarchy can be renormalized
//! by back-substitution to make the pairing the identity. The incoming field
//! is kept in the *linear* slot of the form throughout (`gram[n][m] =
//! B(ũ_m, u_n)`), so renormalized combinations transform by plain matrix
//! multiplication and the base case is literally ũ′₀ = ũ₀ / B(ũ₀, u₀).

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::expand::center::center_modes;
use crate::expand::saddle::{SaddleDirection, SaddleSeries};
use crate::expand::sink::{resonant_defect_c, sink_expansion};
use crate::expand::Profile;
use crate::grid::CollarGrid;
use crate::hermite;

/// Ratio between consecutive flux cutoff scales when none is chosen.
const SCALE_RATIO: f64 = 2.0;

/// Samples across a sink trace in the blow-up variable.
const SINK_TRACE_SAMPLES: usize = 513;

/// Shells compared when extracting a sink trace.
const SINK_TRACE_SHELLS: usize = 3;

/// Least shells and least x-span (ratio) for the center trace fit.
const MIN_FIT_SHELLS: usize = 8;
const MIN_FIT_SPAN: f64 = 1.7;

/// Oscillator-mode resolution rules for center projection: at least this
/// many grid points per mode oscillation, and the grid half-circle must
/// exceed the classical turning point by this many widths 1/√α.
const MODE_PTS_PER_WAVE: f64 = 5.0;
const MODE_EXTENT_MARGIN: f64 = 8.0;
const MODE_DOMAIN_FRACTION: f64 = 0.45;

/// |values| below this count as an identically zero field.
const ZERO_FIELD_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMethod {
    /// Closed-form evaluation on mode traces.
    ModeFormula,
    /// Commutator flux at shrinking cutoff scales, extrapolated.
    FluxLimit,
}

#[derive(Debug, Clone)]
pub struct PairingResult {
    pub value: Complex64,
    pub method: PairingMethod,
    /// Quadrature (mode formula) or extrapolation spread (flux).
    pub estimated_error: f64,
}

#[derive(Debug, Clone)]
pub enum TraceData {
    /// Coefficients against the orthonormal oscillator modes v_j.
    CenterModes(Vec<Complex64>),
    /// Profile samples on a uniform grid in the blow-up variable Y.
    SinkProfile {
        y_lo: f64,
        step: f64,
        vals: Vec<Complex64>,
    },
}

/// Boundary trace of an eigenfunction at one radial point.
#[derive(Debug, Clone)]
pub struct ModeTrace {
    pub q: RadialPoint,
    pub data: TraceData,
    /// √(λ − V(y_c)), the weight in front of the trace integral.
    pub weight: f64,
    /// Front-face measure per stored sample: the Y-grid spacing for sink
    /// profiles, 1 for coefficients against an orthonormal mode basis.
    pub density: f64,
}

impl ModeTrace {
    pub fn is_zero(&self) -> bool {
        match &self.data {
            TraceData::CenterModes(g) => g.iter().all(|c| c.norm() == 0.0),
            TraceData::SinkProfile { vals, .. } => vals.iter().all(|c| c.norm() == 0.0),
        }
    }
}

/// Cutoff family for the flux pairing: χ rises 0→1 over a log-x band of the
/// given width centered at log of the scale, and the integrand may carry a
/// smooth window in y (full strength inside 60% of the half-width).
///
/// The flux is measured on a geometric ladder of scales descending from
/// `x_scale`. Three scales in ratio 2 (the default) support one order-1
/// Richardson extrapolation with an honest spread; a longer ladder lets the
/// extrapolants be accelerated through power-law defects of the inputs.
#[derive(Debug, Clone)]
pub struct FluxCutoff {
    /// Largest cutoff scale; the ladder descends from here.
    pub x_scale: f64,
    /// Width of the transition band in s = log x.
    pub width: f64,
    /// Center of the optional y-window.
    pub y_center: f64,
    /// Half-width of the y-window; infinite disables it.
    pub y_halfwidth: f64,
    /// Number of scales on the ladder (at least 3).
    pub n_scales: usize,
    /// Ratio between consecutive scales (greater than 1).
    pub scale_ratio: f64,
}

impl Default for FluxCutoff {
    fn default() -> Self {
        FluxCutoff {
            x_scale: 0.05,
            width: 0.8,
            y_center: 0.0,
            y_halfwidth: f64::INFINITY,
            n_scales: 3,
            scale_ratio: SCALE_RATIO,
        }
    }
}

/// 7th-order smoothstep: value and first two derivatives. C³ on the line,
/// so the cutoff commutator is C¹ and the shell trapezoid converges fast.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let t3 = t2 * t;
        let omt = 1.0 - t;
        let h = t3 * t * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
        let h1 = 140.0 * t3 * omt * omt * omt;
        let h2 = 420.0 * t2 * omt * omt * (1.0 - 2.0 * t);
        (h, h1, h2)
    }
}

/// Smooth plateau window in one coordinate: 1 for |a| ≤ 0.6, 0 beyond 1.
fn window_taper(a: f64) -> f64 {
    if a <= 0.6 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep((a - 0.6) / 0.4).0
    }
}

fn wrap_dy(y: f64, y_c: f64, circ: f64) -> f64 {
    let mut dy = (y - y_c) % circ;
    if dy > circ / 2.0 {
        dy -= circ;
    }
    if dy < -circ / 2.0 {
        dy += circ;
    }
    dy
}

fn same_energy(l1: f64, l2: f64) -> bool {
    (l1 - l2).abs() <= 1e-12 * (1.0 + l1.abs().max(l2.abs()))
}

// ---------------------------------------------------------------------------
// mode formula

/// Exact pairing of two outgoing boundary traces.
///
/// Traces at distinct critical points pair to zero; center traces pair by
/// the coefficient sum, sink traces by a trapezoid in Y with the quadrature
/// error estimated by comparing against the half-resolution sum.
pub fn pair_modes(t1: &ModeTrace, t2: &ModeTrace) -> Result<PairingResult> {
    if !same_energy(t1.q.lambda, t2.q.lambda) {
        return Err(Error::MixedEnergy(t1.q.lambda, t2.q.lambda));
    }
    if (t1.q.crit.y_c - t2.q.crit.y_c).abs() > 1e-9 {
        // disjoint base points never interact at the boundary
        return Ok(PairingResult {
            value: Complex64::new(0.0, 0.0),
            method: PairingMethod::ModeFormula,
            estimated_error: 0.0,
        });
    }
    let w = 2.0 * t1.weight;
    match (&t1.data, &t2.data) {
        (TraceData::CenterModes(g1), TraceData::CenterModes(g2)) => {
            let n = g1.len().min(g2.len());
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..n {
                sum += g1[k] * g2[k].conj();
            }
            Ok(PairingResult {
                value: w * sum,
                method: PairingMethod::ModeFormula,
                estimated_error: 0.0,
            })
        }
        (
            TraceData::SinkProfile {
                y_lo: a1,
                step: h1,
                vals: p1,
            },
            TraceData::SinkProfile {
                y_lo: a2,
                step: h2,
                vals: p2,
            },
        ) => {
            let hs = h1.abs().max(h2.abs()).max(1e-300);
            if p1.len() != p2.len() || (a1 - a2).abs() > 1e-12 * hs || (h1 - h2).abs() > 1e-12 * hs
            {
                return Err(Error::Invalid(
                    "sink traces sampled on different blow-up grids".into(),
                ));
            }
            let prod: Vec<Complex64> = p1.iter().zip(p2).map(|(a, b)| a * b.conj()).collect();
            let trap = |stride: usize| -> Complex64 {
                let pts: Vec<Complex64> = prod.iter().copied().step_by(stride).collect();
                let mut s = Complex64::new(0.0, 0.0);
                for p in &pts {
                    s += p;
                }
                s -= (pts[0] + pts[pts.len() - 1]) * 0.5;
                s * (h1 * stride as f64)
            };
            let i_h = trap(1);
            let (value, err) = if prod.len() >= 5 && prod.len() % 2 == 1 {
                let i_2h = trap(2);
                ((i_h * 4.0 - i_2h) / 3.0, (i_h - i_2h).norm() / 3.0)
            } else {
                (i_h, 0.0)
            };
            Ok(PairingResult {
                value: w * value,
                method: PairingMethod::ModeFormula,
                estimated_error: w * err,
            })
        }
        _ => Err(Error::Invalid(
            "trace kinds differ at the same base point".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// commutator flux

fn check_same_grid(u1: &CollarGrid, u2: &CollarGrid) -> Result<()> {
    if !same_energy(u1.lambda, u2.lambda) {
        return Err(Error::MixedEnergy(u1.lambda, u2.lambda));
    }
    let nx = u1.nx();
    let same = nx == u2.nx()
        && u1.ny() == u2.ny()
        && (u1.x[0] - u2.x[0]).abs() <= 1e-9 * u1.x[0]
        && (u1.x[nx - 1] - u2.x[nx - 1]).abs() <= 1e-9 * u1.x[nx - 1]
        && (u1.b.circumference - u2.b.circumference).abs() <= 1e-12;
    if !same {
        return Err(Error::Invalid("flux pairing needs a shared grid".into()));
    }
    Ok(())
}

/// Squared y-window per column (the window multiplies both fields).
fn column_window(u: &CollarGrid, cutoff: &FluxCutoff) -> Vec<f64> {
    let circ = u.b.circumference;
    u.y.iter()
        .map(|&y| {
            if cutoff.y_halfwidth.is_finite() {
                let t = window_taper(wrap_dy(y, cutoff.y_center, circ).abs() / cutoff.y_halfwidth);
                t * t
            } else {
                1.0
            }
        })
        .collect()
}

/// One flux integral at cutoff scale r. Rows are assumed validated.
fn flux_at_scale(u1: &CollarGrid, u2: &CollarGrid, r: f64, cutoff: &FluxCutoff, t2: &[f64]) -> Complex64 {
    let nx = u1.nx();
    let ny = u1.ny();
    let ds = u1.ds();
    let dy = u1.dy();
    let s0 = u1.x[0].ln();
    let band_lo = r.ln() - cutoff.width / 2.0;
    let i_lo = (((band_lo - s0) / ds).ceil() as usize).max(2);
    let i_hi = ((((r.ln() + cutoff.width / 2.0) - s0) / ds).floor() as usize).min(nx - 3);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in i_lo..=i_hi {
        let s = s0 + i as f64 * ds;
        let (_, h1, h2) = smoothstep((s - band_lo) / cutoff.width);
        if h1 == 0.0 && h2 == 0.0 {
            continue;
        }
        let chi1 = h1 / cutoff.width;
        let chi2 = h2 / (cutoff.width * cutoff.width);
        let base = i * ny;
        for j in 0..ny {
            if t2[j] == 0.0 {
                continue;
            }
            let dsu = (u1.values[base - 2 * ny + j] - u1.values[base + 2 * ny + j]
                + (u1.values[base + ny + j] - u1.values[base - ny + j]) * 8.0)
                / (12.0 * ds);
            let integ = u1.values[base + j] * chi2 + dsu * (2.0 * chi1);
            acc += integ * u2.values[base + j].conj() * t2[j];
        }
    }
    Complex64::new(0.0, 1.0) * acc * ds * dy
}

/// Flux integrals on the descending scale ladder of the cutoff family.
pub fn flux_scales(
    u1: &CollarGrid,
    u2: &CollarGrid,
    cutoff: &FluxCutoff,
) -> Result<Vec<(f64, Complex64)>> {
    check_same_grid(u1, u2)?;
    if !(cutoff.x_scale > 0.0) || !(cutoff.width > 0.0) {
        return Err(Error::Invalid("cutoff scale and width must be positive".into()));
    }
    if cutoff.n_scales < 3 || cutoff.n_scales > 16 || !(cutoff.scale_ratio > 1.02) {
        return Err(Error::Invalid(
            "the cutoff ladder needs 3..=16 scales in a ratio above 1".into(),
        ));
    }
    let nx = u1.nx();
    let ds = u1.ds();
    let s_min = u1.x[0].ln() + 2.0 * ds;
    let s_max = u1.x[nx - 1].ln() - 2.0 * ds;
    let r_last = cutoff.x_scale / cutoff.scale_ratio.powi(cutoff.n_scales as i32 - 1);
    if r_last.ln() - cutoff.width / 2.0 < s_min || cutoff.x_scale.ln() + cutoff.width / 2.0 > s_max {
        return Err(Error::Invalid(format!(
            "cutoff bands span x in [{:.3e}, {:.3e}], outside the differentiable rows [{:.3e}, {:.3e}]",
            (r_last.ln() - cutoff.width / 2.0).exp(),
            (cutoff.x_scale.ln() + cutoff.width / 2.0).exp(),
            s_min.exp(),
            s_max.exp(),
        )));
    }
    let t2 = column_window(u1, cutoff);
    let mut out = Vec::with_capacity(cutoff.n_scales);
    let mut r = cutoff.x_scale;
    for _ in 0..cutoff.n_scales {
        out.push((r, flux_at_scale(u1, u2, r, cutoff, &t2)));
        r /= cutoff.scale_ratio;
    }
    Ok(out)
}

/// Extrapolate the measured fluxes to scale zero.
///
/// Adjacent scales are combined by order-1 Richardson in the scale (exact on
/// a defect linear in r), and the extrapolant sequence is then run through
/// Wynn's epsilon algorithm: each even column absorbs one more geometric
/// defect family of arbitrary complex ratio — this is what kills the
/// oscillatory r^(1+i delta) residue of fields built from truncated
/// expansions. The value and its error estimate are the last two entries of
/// the deepest even column still holding two entries; on the default
/// three-scale ladder that column is the extrapolants themselves, so the
/// value is the plain Richardson limit and the error their difference.
/// Also returns the raw drift |F(first) − F(last)| across the ladder.
fn extrapolate(f: &[(f64, Complex64)]) -> (Complex64, f64, f64) {
    let q = f[0].0 / f[1].0;
    let e: Vec<Complex64> = f
        .windows(2)
        .map(|w| (w[1].1 * q - w[0].1) / (q - 1.0))
        .collect();
    let drift = (f[0].1 - f[f.len() - 1].1).norm();
    let mut best = e.clone();
    let mut prev = vec![Complex64::new(0.0, 0.0); e.len() + 1];
    let mut cur = e;
    let mut even = true;
    'table: while cur.len() >= 2 {
        let mut nxt = Vec::with_capacity(cur.len() - 1);
        for n in 0..cur.len() - 1 {
            let d = cur[n + 1] - cur[n];
            if !(d.norm() > 1e-280) {
                // flat to rounding (or invalid): the table ends here
                break 'table;
            }
            nxt.push(prev[n + 1] + Complex64::new(1.0, 0.0) / d);
        }
        prev = std::mem::replace(&mut cur, nxt);
        even = !even;
        if even && cur.len() >= 2 {
            best = cur.clone();
        }
    }
    let value = best[best.len() - 1];
    let err = (value - best[best.len() - 2]).norm();
    (value, err, drift)
}

/// The natural magnitude of a pairing of these two fields: the windowed sup
/// of each over the cutoff bands times twice the largest frequency. Used
/// only as a floor in the convergence test, so that identically small
/// pairings ("anything against a rapidly decreasing field") pass trivially.
fn band_scale(u1: &CollarGrid, u2: &CollarGrid, cutoff: &FluxCutoff, t2: &[f64]) -> f64 {
    let nx = u1.nx();
    let ny = u1.ny();
    let ds = u1.ds();
    let s0 = u1.x[0].ln();
    let lo = cutoff.x_scale.ln()
        - (cutoff.n_scales as f64 - 1.0) * cutoff.scale_ratio.ln()
        - cutoff.width / 2.0;
    let hi = cutoff.x_scale.ln() + cutoff.width / 2.0;
    let i_lo = (((lo - s0) / ds).ceil() as usize).max(2);
    let i_hi = ((((hi) - s0) / ds).floor() as usize).min(nx - 3);
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for i in i_lo..=i_hi {
        for j in 0..ny {
            if t2[j] == 0.0 {
                continue;
            }
            let w = t2[j].sqrt();
            s1 = s1.max(u1.values[i * ny + j].norm() * w);
            s2 = s2.max(u2.values[i * ny + j].norm() * w);
        }
    }
    let vmin = u1
        .y
        .iter()
        .map(|&y| u1.b.v0(y))
        .fold(f64::INFINITY, f64::min);
    let ly = u1
        .b
        .circumference
        .min(if cutoff.y_halfwidth.is_finite() {
            2.0 * cutoff.y_halfwidth
        } else {
            f64::INFINITY
        });
    2.0 * (u1.lambda - vmin).max(0.0).sqrt() * s1 * s2 * ly
}

/// Commutator-flux pairing of two grid fields.
///
/// The flux is measured on the cutoff's scale ladder and extrapolated to
/// scale zero; the final-stage spread is the estimated error, and the result
/// is rejected as non-convergent when that spread exceeds `flux_tol`
/// relative to the measured flux magnitudes (with the band magnitude of the
/// fields as a floor).
pub fn pair_flux(
    u1: &CollarGrid,
    u2: &CollarGrid,
    cutoff: &FluxCutoff,
    cfg: &Config,
) -> Result<PairingResult> {
    let f = flux_scales(u1, u2, cutoff)?;
    let (value, spread, _) = extrapolate(&f);
    let t2 = column_window(u1, cutoff);
    let reference = f
        .iter()
        .map(|(_, v)| v.norm())
        .fold(band_scale(u1, u2, cutoff, &t2), f64::max);
    if spread > cfg.flux_tol * reference {
        return Err(Error::NoConvergence(format!(
            "flux extrapolation spread {:.3e} at scales {:.2e}..{:.2e} exceeds {:.1e} of the flux scale {:.3e}",
            spread,
            f[f.len() - 1].0,
            f[0].0,
            cfg.flux_tol,
            reference,
        )));
    }
    Ok(PairingResult {
        value,
        method: PairingMethod::FluxLimit,
        estimated_error: spread,
    })
}

// ---------------------------------------------------------------------------
// trace extraction

/// Read the boundary trace of a field off a sequence of shells near the
/// given radial point.
///
/// Centers: project the unitarily rescaled shells onto the oscillator modes
/// and extrapolate the per-mode coefficients in √x; sinks: divide out the
/// phase and power factors and resample the profile in the blow-up variable
/// at three shells, which must agree. A field whose shells do not fit the
/// modal form within `fit_tol` is rejected.
pub fn extract_mode_trace(field: &CollarGrid, q: &RadialPoint, cfg: &Config) -> Result<ModeTrace> {
    if !same_energy(field.lambda, q.lambda) {
        return Err(Error::MixedEnergy(field.lambda, q.lambda));
    }
    match q.kind {
        RadialKind::Center => extract_center_trace(field, q, cfg),
        RadialKind::SinkOrSource => extract_sink_trace(field, q, cfg),
        _ => Err(Error::WrongKind(format!(
            "mode traces live at centers and sinks, not at a {}",
            q.kind
        ))),
    }
}

fn extract_center_trace(field: &CollarGrid, q: &RadialPoint, cfg: &Config) -> Result<ModeTrace> {
    let nx = field.nx();
    let ny = field.ny();
    let circ = field.b.circumference;
    let dy = field.dy();
    let nu = q.nu_t;
    let v1 = q.crit.v1;
    let y_c = q.crit.y_c;
    let j_try = cfg.j_max.min(48);
    let modes = center_modes(q, j_try + 1)?;
    let alpha = modes.alpha;

    // Largest mode count for which a usable run of shells exists: the shell
    // spacing in Y must resolve the top mode's oscillation and the half
    // circle must clear its turning point.
    let mut chosen: Option<(usize, usize, usize)> = None;
    for j in (0..=j_try).rev() {
        let width = (alpha * (2.0 * j as f64 + 1.0)).sqrt();
        let x_sp = (MODE_PTS_PER_WAVE * dy * width / std::f64::consts::PI).powi(2);
        let x_ext = (MODE_DOMAIN_FRACTION * circ * alpha.sqrt()
            / ((2.0 * j as f64 + 1.0).sqrt() + MODE_EXTENT_MARGIN))
            .powi(2);
        let lo = x_sp.max(field.x[2]);
        let hi = x_ext.min(field.x[nx - 3]);
        if !(hi > lo * MIN_FIT_SPAN) {
            continue;
        }
        let i_lo = field.x.iter().position(|&x| x >= lo).unwrap_or(nx);
        let i_hi = field.x.iter().rposition(|&x| x <= hi).unwrap_or(0);
        if i_hi >= i_lo && i_hi - i_lo + 1 >= MIN_FIT_SHELLS {
            chosen = Some((j, i_lo, i_hi));
            break;
        }
    }
    let (j_cap, i_lo, i_hi) = chosen.ok_or_else(|| {
        Error::GridTooCoarse(format!(
            "no run of shells resolves even the ground oscillator mode (alpha {alpha:.3}, dy {dy:.3e})"
        ))
    })?;
    let nmodes = j_cap + 1;

    // per-shell projections gamma_j(x)
    let shells: Vec<usize> = (i_lo..=i_hi).collect();
    let mut gam = vec![vec![Complex64::new(0.0, 0.0); shells.len()]; nmodes];
    for (sidx, &i) in shells.iter().enumerate() {
        let x = field.x[i];
        let sqx = x.sqrt();
        let lx = x.ln();
        let mut sums = vec![Complex64::new(0.0, 0.0); nmodes];
        for col in 0..ny {
            let yy = wrap_dy(field.y[col], y_c, circ) / sqx;
            let u = field.values[i * ny + col];
            if u.norm_sqr() == 0.0 {
                continue;
            }
            // conj of the mode factor e^{-i nu Y^2/4} psi_j(Y)
            let untwist = Complex64::new(0.0, nu * yy * yy / 4.0).exp();
            let psis = hermite::psi_all(nmodes, alpha, yy);
            let base = u * untwist;
            for (jm, &p) in psis.iter().enumerate() {
                sums[jm] += base * p;
            }
        }
        let outer = Complex64::new(0.0, -nu / x).exp() * x.powf(-0.25) * (dy / sqx);
        for jm in 0..nmodes {
            let phase = Complex64::new(0.0, -(modes.betas[jm] + v1) / (2.0 * nu) * lx).exp();
            gam[jm][sidx] = sums[jm] * outer * phase;
        }
    }

    // least-squares fit gamma_j(x) = a_j + b_j sqrt(x) per mode
    let sx: Vec<f64> = shells.iter().map(|&i| field.x[i].sqrt()).collect();
    let n = sx.len() as f64;
    let s1: f64 = sx.iter().sum();
    let s2: f64 = sx.iter().map(|v| v * v).sum();
    let det = n * s2 - s1 * s1;
    let mut coeffs = Vec::with_capacity(nmodes);
    let mut resid2 = 0.0;
    let mut signal2 = 0.0;
    for g in &gam {
        let t0: Complex64 = g.iter().sum();
        let t1: Complex64 = g.iter().zip(&sx).map(|(v, &s)| v * s).sum();
        let a = (t0 * s2 - t1 * s1) / det;
        let b = (t1 * n - t0 * s1) / det;
        for (v, &s) in g.iter().zip(&sx) {
            resid2 += (v - a - b * s).norm_sqr();
            signal2 += v.norm_sqr();
        }
        coeffs.push(a);
    }
    if signal2 == 0.0 {
        return Ok(ModeTrace {
            q: *q,
            data: TraceData::CenterModes(vec![Complex64::new(0.0, 0.0); nmodes]),
            weight: nu,
            density: 1.0,
        });
    }
    let misfit = (resid2 / signal2).sqrt();
    if misfit > cfg.fit_tol {
        return Err(Error::FormMismatch(format!(
            "per-shell mode coefficients deviate from a + b sqrt(x) by {:.3e} (allowed {:.1e})",
            misfit, cfg.fit_tol
        )));
    }
    Ok(ModeTrace {
        q: *q,
        data: TraceData::CenterModes(coeffs),
        weight: nu,
        density: 1.0,
    })
}

fn extract_sink_trace(field: &CollarGrid, q: &RadialPoint, cfg: &Config) -> Result<ModeTrace> {
    let nx = field.nx();
    let ny = field.ny();
    let circ = field.b.circumference;
    let ds = field.ds();
    let r1 = q.r1.re;
    let y_c = q.crit.y_c;

    // three shells a factor ~2 apart, as high in the collar as possible
    let stride = ((SCALE_RATIO.ln() / ds).round() as usize).max(1);
    let i_top = nx - 3;
    if i_top < 2 + (SINK_TRACE_SHELLS - 1) * stride {
        return Err(Error::GridTooCoarse(
            "not enough shells for a sink trace comparison".into(),
        ));
    }
    let shells: Vec<usize> = (0..SINK_TRACE_SHELLS)
        .map(|k| i_top - k * stride)
        .collect();

    // support in Y read off the finest shell
    let mut umax = 0.0f64;
    for &i in &shells {
        for v in field.shell(i) {
            umax = umax.max(v.norm());
        }
    }
    let n = SINK_TRACE_SAMPLES;
    if umax < ZERO_FIELD_FLOOR {
        let r = 1.0;
        return Ok(ModeTrace {
            q: *q,
            data: TraceData::SinkProfile {
                y_lo: -r,
                step: 2.0 * r / (n - 1) as f64,
                vals: vec![Complex64::new(0.0, 0.0); n],
            },
            weight: q.nu_t,
            density: 2.0 * r / (n - 1) as f64,
        });
    }
    let x_top = field.x[shells[0]];
    let mut reach = 0.0f64;
    for col in 0..ny {
        if field.values[shells[0] * ny + col].norm() > 1e-13 * umax {
            reach = reach.max(wrap_dy(field.y[col], y_c, circ).abs());
        }
    }
    let r_cap = MODE_DOMAIN_FRACTION * circ / x_top.powf(r1);
    let r = (reach / x_top.powf(r1) * 1.05).clamp(0.1, r_cap);
    let step = 2.0 * r / (n - 1) as f64;

    // phase data shared with the builder: jet, power, resonant twist
    let c = if q.resonant {
        Some(resonant_defect_c(q, &field.b, cfg)?)
    } else {
        None
    };
    let exp = sink_expansion(q, Profile::Zero, c, &field.b, cfg)?;

    let mut profiles: Vec<Vec<Complex64>> = Vec::with_capacity(shells.len());
    for &i in &shells {
        let x = field.x[i];
        let xr = x.powf(r1);
        let lx = x.ln();
        let pow = (exp.beta * lx).exp();
        let mut p = Vec::with_capacity(n);
        for k in 0..n {
            let yy = -r + step * k as f64;
            let dyk = yy * xr;
            let (phi, _) = exp.phase.eval_jet(dyk);
            let mut factor = Complex64::new(0.0, phi / x).exp() * pow;
            if let Some(cres) = exp.resonant_c {
                let nres = (1.0 / r1).round() as i32;
                factor *= Complex64::new(0.0, -cres * yy.powi(nres) * lx).exp();
            }
            p.push(field.interp_y(i, y_c + dyk) / factor);
        }
        profiles.push(p);
    }

    // the shells must tell one story
    let norm0: f64 = profiles[0].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for k in 1..profiles.len() {
        let diff: f64 = profiles[0]
            .iter()
            .zip(&profiles[k])
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if diff > cfg.fit_tol * norm0 {
            return Err(Error::FormMismatch(format!(
                "sink profiles at x = {:.3e} and x = {:.3e} differ by {:.3e} relative",
                field.x[shells[0]],
                field.x[shells[k]],
                diff / norm0,
            )));
        }
    }
    Ok(ModeTrace {
        q: *q,
        data: TraceData::SinkProfile {
            y_lo: -r,
            step,
            vals: profiles.swap_remove(0),
        },
        weight: q.nu_t,
        density: step,
    })
}

// ---------------------------------------------------------------------------
// saddle biorthogonalization

/// Pairings of the incoming saddle models against the outgoing ones,
/// measured by the commutator flux on per-model fields.
#[derive(Debug, Clone)]
pub struct SaddleGram {
    /// gram[n][m] = B(ũ_m, u_n): incoming model m in the linear slot.
    pub gram: Vec<Vec<Complex64>>,
    /// Scale drift of each entry: max of the extrapolant difference and the
    /// full drift across the measured scales. The Richardson remainder of a
    /// slowly decaying zero entry can exceed the extrapolant difference
    /// alone, so the drift is kept as the honest uncertainty.
    pub spread: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Biorthogonalized {
    /// Renormalized incoming hierarchies ũ′_m = Σ_k transform[k][m] ũ_k.
    pub renormalized: Vec<SaddleSeries>,
    pub transform: Vec<Vec<Complex64>>,
    pub gram: SaddleGram,
}

fn unit_coeffs(len: usize, k: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); len];
    c[k] = Complex64::new(1.0, 0.0);
    c
}

/// Measure the pairing of every incoming model against every outgoing one.
///
/// Each model is built as its own windowed field and the flux is evaluated
/// at the three cutoff scales; entries carry their measured scale drift.
pub fn measure_saddle_gram(
    outgoing: &SaddleSeries,
    incoming: &SaddleSeries,
    b: &BoundaryData,
    grid_spec: (f64, f64, usize, usize),
    y_halfwidth: f64,
    cutoff: &FluxCutoff,
) -> Result<SaddleGram> {
    if outgoing.direction != SaddleDirection::Outgoing
        || incoming.direction != SaddleDirection::Incoming
    {
        return Err(Error::Invalid(
            "gram measurement wants an outgoing and an incoming hierarchy".into(),
        ));
    }
    if !same_energy(outgoing.q.lambda, incoming.q.lambda) {
        return Err(Error::MixedEnergy(outgoing.q.lambda, incoming.q.lambda));
    }
    if (outgoing.q.crit.y_c - incoming.q.crit.y_c).abs() > 1e-9 {
        return Err(Error::Invalid(
            "gram measurement wants hierarchies at one saddle".into(),
        ));
    }
    let nmod = outgoing.models.len().min(incoming.models.len());
    if nmod == 0 {
        return Err(Error::Invalid("no models to pair".into()));
    }
    let mut out_fields = Vec::with_capacity(nmod);
    let mut inc_fields = Vec::with_capacity(nmod);
    for k in 0..nmod {
        out_fields.push(
            outgoing
                .clone()
                .with_coeffs(unit_coeffs(outgoing.models.len(), k))
                .build_field(b, grid_spec, y_halfwidth)?,
        );
        inc_fields.push(
            incoming
                .clone()
                .with_coeffs(unit_coeffs(incoming.models.len(), k))
                .build_field(b, grid_spec, y_halfwidth)?,
        );
    }
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); nmod]; nmod];
    let mut spread = vec![vec![0.0f64; nmod]; nmod];
    let mut scales = Vec::new();
    for n in 0..nmod {
        for m in 0..nmod {
            let f = flux_scales(&inc_fields[m], &out_fields[n], cutoff)?;
            let (value, cauchy, drift) = extrapolate(&f);
            gram[n][m] = value;
            spread[n][m] = cauchy.max(drift);
            scales = f.iter().map(|(r, _)| *r).collect();
        }
    }
    Ok(SaddleGram {
        gram,
        spread,
        scales,
    })
}

/// Solve for the renormalizing coefficients on a measured Gram matrix.
///
/// The sub-diagonal entries vanish for exact hierarchies, so they are set
/// to zero and the triangular system gram · c = I is back-substituted. The
/// columns of the result express the renormalized incoming models in terms
/// of the raw ones.
pub fn biorthogonalize_gram(gram: &[Vec<Complex64>], cfg: &Config) -> Result<Vec<Vec<Complex64>>> {
    let n = gram.len();
    for m in 0..n {
        let d = gram[m][m].norm();
        if d < cfg.biorth_tol {
            return Err(Error::SingularDiagonal { index: m, value: d });
        }
    }
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for m in 0..n {
        c[m][m] = Complex64::new(1.0, 0.0) / gram[m][m];
        for row in (0..m).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in row + 1..=m {
                s += gram[row][k] * c[k][m];
            }
            c[row][m] = -s / gram[row][row];
        }
    }
    Ok(c)
}

/// Renormalize an incoming saddle hierarchy against an outgoing one so that
/// the measured pairing becomes the identity.
pub fn biorthogonalize(
    outgoing: &SaddleSeries,
    incoming: &SaddleSeries,
    b: &BoundaryData,
    grid_spec: (f64, f64, usize, usize),
    y_halfwidth: f64,
    cutoff: &FluxCutoff,
    cfg: &Config,
) -> Result<Biorthogonalized> {
    let gram = measure_saddle_gram(outgoing, incoming, b, grid_spec, y_halfwidth, cutoff)?;
    let transform = biorthogonalize_gram(&gram.gram, cfg)?;
    let nmod = transform.len();
    let mut renormalized = Vec::with_capacity(nmod);
    for m in 0..nmod {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); incoming.models.len()];
        for k in 0..nmod {
            coeffs[k] = transform[k][m];
        }
        renormalized.push(incoming.clone().with_coeffs(coeffs));
    }
    Ok(Biorthogonalized {
        renormalized,
        transform,
        gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{radial_points, Direction};
    use crate::expand::center::build_center_eigenfunction;
    use crate::expand::saddle::saddle_models;
    use crate::expand::sink::build_sink_eigenfunction;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn cfg() -> Config {
        Config::default()
    }

    fn cosine() -> BoundaryData {
        BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap()
    }

    fn outgoing_center(lambda: f64) -> RadialPoint {
        radial_points(&cosine(), lambda, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::Center)
            .unwrap()
    }

    fn outgoing_sink(b: &BoundaryData, lambda: f64) -> Vec<RadialPoint> {
        radial_points(b, lambda, &cfg())
            .unwrap()
            .into_iter()
            .filter(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::SinkOrSource)
            .collect()
    }

    fn center_trace(q: &RadialPoint, g: &[Complex64]) -> ModeTrace {
        ModeTrace {
            q: *q,
            data: TraceData::CenterModes(g.to_vec()),
            weight: q.nu_t,
            density: 1.0,
        }
    }

    fn center_field(
        q: &RadialPoint,
        gammas: Vec<Complex64>,
        grid: (f64, f64, usize, usize),
    ) -> CollarGrid {
        let b = cosine();
        let exp = center_modes(q, 8).unwrap().with_gammas(gammas);
        build_center_eigenfunction(&exp, &b, grid, &cfg()).unwrap()
    }

    const FLUX_GRID: (f64, f64, usize, usize) = (1.5e-3, 0.06, 5400, 128);

    fn flux_cutoff() -> FluxCutoff {
        FluxCutoff {
            x_scale: 0.02,
            ..FluxCutoff::default()
        }
    }

    #[test]
    fn mode_formula_is_sesquilinear_symmetric_and_positive() {
        let q = outgoing_center(0.5);
        let g1 = [Complex64::new(0.3, -0.4), Complex64::new(0.1, 0.7)];
        let g2 = [Complex64::new(-0.2, 0.5), Complex64::new(0.9, 0.0)];
        let a = Complex64::new(0.6, -1.2);
        let combo: Vec<Complex64> = g1.iter().zip(&g2).map(|(x, y)| a * x + y).collect();
        let b12 = pair_modes(&center_trace(&q, &g1), &center_trace(&q, &g2)).unwrap();
        let b22 = pair_modes(&center_trace(&q, &g2), &center_trace(&q, &g2)).unwrap();
        let bc2 = pair_modes(&center_trace(&q, &combo), &center_trace(&q, &g2)).unwrap();
        assert!((bc2.value - (a * b12.value + b22.value)).norm() < 1e-14);

        let b21 = pair_modes(&center_trace(&q, &g2), &center_trace(&q, &g1)).unwrap();
        assert!((b12.value - b21.value.conj()).norm() < 1e-14);

        // diagonal real, positive, exactly the weighted coefficient norm
        assert!(b22.value.im.abs() < 1e-14);
        let want = 2.0 * q.nu_t * g2.iter().map(|g| g.norm_sqr()).sum::<f64>();
        assert!((b22.value.re - want).abs() < 1e-13);
        let z = [Complex64::new(0.0, 0.0)];
        let bzz = pair_modes(&center_trace(&q, &z), &center_trace(&q, &z)).unwrap();
        assert_eq!(bzz.value.norm(), 0.0);

        // energies must match
        let q5 = radial_points(&cosine(), 5.0, &cfg())
            .unwrap()
            .into_iter()
            .find(|p| p.sign == Direction::Outgoing && p.kind == RadialKind::SinkOrSource)
            .unwrap();
        let err = pair_modes(&center_trace(&q, &g1), &center_trace(&q5, &g2)).unwrap_err();
        assert!(matches!(err, Error::MixedEnergy(_, _)));
    }

    #[test]
    fn sink_traces_pair_by_the_profile_integral() {
        let b = cosine();
        let q = outgoing_sink(&b, 5.0)[0];
        let n = 481;
        let r = 12.0;
        let step = 2.0 * r / (n - 1) as f64;
        let gauss: Vec<Complex64> = (0..n)
            .map(|k| {
                let y: f64 = -r + step * k as f64;
                Complex64::new((-0.5 * y * y).exp(), 0.0)
            })
            .collect();
        let t = ModeTrace {
            q,
            data: TraceData::SinkProfile {
                y_lo: -r,
                step,
                vals: gauss,
            },
            weight: q.nu_t,
            density: step,
        };
        let got = pair_modes(&t, &t).unwrap();
        let want = 2.0 * 6.0f64.sqrt() * PI.sqrt();
        assert!(
            (got.value.re - want).abs() < 1e-10 * want,
            "gaussian norm pairing {} vs {}",
            got.value.re,
            want
        );
        assert!(got.value.im.abs() < 1e-12);
        assert!(got.estimated_error < 1e-8);
    }

    #[test]
    fn traces_at_distinct_minima_pair_to_zero() {
        let b = BoundaryData::from_v0(vec![(2, 0.3, 0.0)], TAU).unwrap();
        let sinks = outgoing_sink(&b, 5.0);
        assert_eq!(sinks.len(), 2, "cos 2y has two minima");
        let n = 65;
        let step = 2.0 * 6.0 / (n - 1) as f64;
        let bump: Vec<Complex64> = (0..n)
            .map(|k| {
                let y: f64 = -6.0 + step * k as f64;
                Complex64::new((-y * y).exp(), 0.2)
            })
            .collect();
        let t1 = ModeTrace {
            q: sinks[0],
            data: TraceData::SinkProfile {
                y_lo: -6.0,
                step,
                vals: bump,
            },
            weight: sinks[0].nu_t,
            density: step,
        };
        let t2 = ModeTrace {
            q: sinks[1],
            data: TraceData::SinkProfile {
                y_lo: -6.0,
                step,
                vals: vec![Complex64::new(0.0, 0.0); n],
            },
            weight: sinks[1].nu_t,
            density: step,
        };
        assert!(t2.is_zero());
        let got = pair_modes(&t1, &t2).unwrap();
        assert_eq!(got.value.norm(), 0.0);
        assert_eq!(got.estimated_error, 0.0);
    }

    #[test]
    fn flux_on_a_single_mode_recovers_the_weight() {
        let q = outgoing_center(0.5);
        let f = center_field(&q, vec![Complex64::new(1.0, 0.0)], FLUX_GRID);
        let got = pair_flux(&f, &f, &flux_cutoff(), &cfg()).unwrap();
        let want = 2.0 * 1.5f64.sqrt();
        assert_eq!(got.method, PairingMethod::FluxLimit);
        assert!(
            (got.value.re - want).abs() < 1e-3 * want,
            "single-mode flux {} vs 2 nu {}",
            got.value.re,
            want
        );
        assert!(got.value.im.abs() < 1e-3 * want);
        assert!(got.value.re > 0.0);
        assert!(got.estimated_error < 1e-3 * want);
    }

    #[test]
    fn flux_matches_the_mode_formula_on_random_center_pairs() {
        let q = outgoing_center(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<Vec<Complex64>> = (0..5)
            .map(|_| {
                (0..4)
                    .map(|j| {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        Complex64::new(re, im) * 0.8f64.powi(j)
                    })
                    .collect()
            })
            .collect();
        // multi-mode fields carry oscillatory truncation defects, so give
        // the extrapolation a ladder long enough to accelerate through them
        let grid = (1.5e-3, 0.06, 16000, 512);
        let cutoff = FluxCutoff {
            x_scale: 0.04,
            n_scales: 9,
            scale_ratio: std::f64::consts::SQRT_2,
            ..FluxCutoff::default()
        };
        // walk the pairing ring (i, i+1) holding two fields at a time
        let mut field_i = center_field(&q, draws[0].clone(), grid);
        for i in 0..5 {
            let k = (i + 1) % 5;
            let field_k = center_field(&q, draws[k].clone(), grid);
            let flux = pair_flux(&field_i, &field_k, &cutoff, &cfg()).unwrap();
            let modes =
                pair_modes(&center_trace(&q, &draws[i]), &center_trace(&q, &draws[k])).unwrap();
            let scale = modes.value.norm().max(1e-2);
            assert!(
                (flux.value - modes.value).norm() <= 1e-3 * scale,
                "pair {i}-{k}: flux {} vs modes {}, error {:.3e}",
                flux.value,
                modes.value,
                (flux.value - modes.value).norm()
            );

            if i == 0 {
                // an admissible deformation of the cutoff moves the answer
                // by no more than the reported spreads
                let alt = FluxCutoff {
                    x_scale: 0.0378,
                    width: 0.7,
                    n_scales: 9,
                    scale_ratio: std::f64::consts::SQRT_2,
                    ..FluxCutoff::default()
                };
                let bb = pair_flux(&field_i, &field_k, &alt, &cfg()).unwrap();
                let slack = 3.0 * (flux.estimated_error + bb.estimated_error) + 1e-6;
                assert!(
                    (flux.value - bb.value).norm() <= slack,
                    "cutoff dependence {} vs allowed {}",
                    (flux.value - bb.value).norm(),
                    slack
                );
            }
            field_i = field_k;
        }
    }

    #[test]
    fn rapidly_decreasing_fields_pair_to_zero() {
        let q = outgoing_center(0.5);
        let f2 = center_field(&q, vec![Complex64::new(1.0, 0.0)], FLUX_GRID);
        let mut f1 = f2.zero_like();
        let y_c = q.crit.y_c;
        f1.fill(|x, y| {
            let dy = wrap_dy(y, y_c, TAU);
            Complex64::new(1.0, 0.3) * x.powi(5) * (-dy * dy).exp()
        });
        let got = pair_flux(&f1, &f2, &flux_cutoff(), &cfg()).unwrap();
        let scale = 2.0 * 1.5f64.sqrt();
        assert!(
            got.value.norm() <= 1e-3 * scale,
            "decaying field pairs to {} against scale {}",
            got.value.norm(),
            scale
        );
    }

    #[test]
    fn center_round_trip_recovers_the_coefficients() {
        let q = outgoing_center(0.5);
        let b = cosine();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gammas: Vec<Complex64> = (0..9)
            .map(|j| {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                Complex64::new(re, im) * 0.75f64.powi(j)
            })
            .collect();
        let exp = center_modes(&q, 12).unwrap().with_gammas(gammas.clone());
        let field = build_center_eigenfunction(&exp, &b, (5e-3, 0.35, 900, 256), &cfg()).unwrap();
        let trace = extract_mode_trace(&field, &q, &cfg()).unwrap();
        let got = match &trace.data {
            TraceData::CenterModes(g) => g.clone(),
            _ => panic!("expected center data"),
        };
        assert!(got.len() >= 9, "recovered {} modes", got.len());
        for j in 0..9 {
            assert!(
                (got[j] - gammas[j]).norm() < 1e-6,
                "mode {j}: {} vs {}",
                got[j],
                gammas[j]
            );
        }
        for g in got.iter().skip(9) {
            assert!(g.norm() < 1e-6, "phantom mode amplitude {}", g.norm());
        }
        assert!((trace.weight - q.nu_t).abs() < 1e-14);

        // a field with a broken oscillation is not of the modal form
        let mut bad = field.clone();
        for i in 0..bad.nx() {
            let w = Complex64::new(0.0, 0.5 / bad.x[i]).exp();
            for j in 0..bad.ny() {
                let idx = bad.idx(i, j);
                bad.values[idx] *= w;
            }
        }
        let err = extract_mode_trace(&bad, &q, &cfg()).unwrap_err();
        assert!(matches!(err, Error::FormMismatch(_)), "got {err}");

        // zero fields carry zero traces
        let zero = field.zero_like();
        let tz = extract_mode_trace(&zero, &q, &cfg()).unwrap();
        assert!(tz.is_zero());
    }

    #[test]
    fn sink_round_trip_recovers_the_profile() {
        let b = cosine();
        let q = outgoing_sink(&b, 5.0)[0];
        let profile = Profile::Gaussian {
            sigma: 0.06,
            center: 0.1,
        };
        let exp = sink_expansion(&q, profile.clone(), None, &b, &cfg()).unwrap();
        let field = build_sink_eigenfunction(&exp, &b, (0.05, 0.4, 400, 3072), &cfg()).unwrap();
        let trace = extract_mode_trace(&field, &q, &cfg()).unwrap();
        let (y_lo, step, vals) = match &trace.data {
            TraceData::SinkProfile { y_lo, step, vals } => (*y_lo, *step, vals.clone()),
            _ => panic!("expected sink data"),
        };
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let want = profile.eval(y_lo + step * k as f64);
            err2 += (v - want).norm_sqr();
            ref2 += want.norm_sqr();
        }
        let rel = (err2 / ref2).sqrt();
        assert!(rel < 1e-6, "sink profile L2 round-trip error {rel:.3e}");
        assert!((trace.density - step).abs() < 1e-15);
    }

    #[test]
    fn resonant_sink_round_trip_recovers_the_profile() {
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0), (2, 0.2, 0.0)], TAU).unwrap();
        let lambda = -0.8 + 16.0 * 0.1 / 3.0;
        let q = outgoing_sink(&b, lambda)[0];
        assert!(q.resonant);
        let profile = Profile::Gaussian {
            sigma: 0.05,
            center: 0.0,
        };
        let c = resonant_defect_c(&q, &b, &cfg()).unwrap();
        let exp = sink_expansion(&q, profile.clone(), Some(c), &b, &cfg()).unwrap();
        let field = build_sink_eigenfunction(&exp, &b, (0.02, 0.3, 300, 2048), &cfg()).unwrap();
        let trace = extract_mode_trace(&field, &q, &cfg()).unwrap();
        let (y_lo, step, vals) = match &trace.data {
            TraceData::SinkProfile { y_lo, step, vals } => (*y_lo, *step, vals.clone()),
            _ => panic!("expected sink data"),
        };
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let want = profile.eval(y_lo + step * k as f64);
            err2 += (v - want).norm_sqr();
            ref2 += want.norm_sqr();
        }
        let rel = (err2 / ref2).sqrt();
        assert!(rel < 1e-5, "resonant round-trip error {rel:.3e}");
    }

    fn saddle_at(lambda: f64) -> (BoundaryData, RadialPoint) {
        let b = cosine();
        let q = radial_points(&b, lambda, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.kind == RadialKind::Saddle && q.nu_t > 0.0)
            .unwrap();
        (b, q)
    }

    #[test]
    fn saddle_gram_is_upper_triangular_and_renormalizable() {
        let (b, q) = saddle_at(400.0);
        let c = cfg();
        let out = saddle_models(&q, SaddleDirection::Outgoing, 3, 5, &b, &c).unwrap();
        let inc = saddle_models(&q, SaddleDirection::Incoming, 3, 5, &b, &c).unwrap();
        // The diagonal entries are stationary-phase integrals of effective
        // width dy* = sqrt(2x/(nu (r2 - r1))). Two things set the feasible
        // measurement window: the collar halfwidth must cover ~3 widths at
        // the top scale, and the incoming models carry a quadratic phase in
        // their own blow-up variable that perturbs the Fresnel phase by
        // ~ m / (nu (r2-r1) x), so the ladder has to stay well above the
        // scale where that ratio reaches one. Both push toward large nu:
        // at lambda = 400 the ladder below keeps the perturbation under 30%
        // and lets the epsilon table absorb the rest.
        let grid = (0.12, 0.9, 1536, 1280);
        let cutoff = FluxCutoff {
            x_scale: 0.55,
            scale_ratio: 1.2,
            n_scales: 5,
            ..FluxCutoff::default()
        };
        let res = biorthogonalize(&out, &inc, &b, grid, 1.5, &cutoff, &c).unwrap();
        let g = &res.gram;

        // the leading diagonal entry is a stationary-phase integral with a
        // computable limit: the phase difference between the incoming and
        // outgoing branches has second derivative nu (r1 - r2) < 0, so the
        // Fresnel factor carries phase -pi/4
        let nu = q.nu_t;
        let dpp = nu * (q.r2.re - q.r1.re);
        let want =
            Complex64::from_polar(2.0 * nu * (2.0 * PI / dpp).sqrt(), -PI / 4.0);
        assert!(
            (g.gram[0][0] - want).norm() < 0.1 * want.norm(),
            "leading diagonal {} vs stationary phase {}",
            g.gram[0][0],
            want
        );
        // second moment of the same Fresnel integral: one factor of the
        // blow-up variable from each side contracts to -i/(nu (r2-r1))
        let ratio = g.gram[1][1] / g.gram[0][0];
        let want1 = Complex64::new(0.0, -1.0) / dpp;
        assert!(
            (ratio - want1).norm() < 0.15 * want1.norm(),
            "diagonal ratio {} vs second moment {}",
            ratio,
            want1
        );

        for n in 0..3 {
            assert!(
                g.gram[n][n].norm() > 1e-4,
                "degenerate diagonal {} at {n}",
                g.gram[n][n]
            );
            for m in 0..n {
                assert!(
                    g.gram[n][m].norm() <= g.spread[n][m] + 1e-6,
                    "sub-diagonal ({n},{m}) = {} exceeds spread {}",
                    g.gram[n][m].norm(),
                    g.spread[n][m]
                );
            }
        }
        // the first two diagonals resolve sharply; the third is suppressed
        // by (2/(nu (r2-r1)))^2 ~ 1e-2, so its honest error bar is absolute
        // (a fraction of the leading diagonal), not relative
        for n in 0..2 {
            assert!(
                g.spread[n][n] < 0.3 * g.gram[n][n].norm(),
                "diagonal {n} spread {} vs value {}",
                g.spread[n][n],
                g.gram[n][n].norm()
            );
        }
        assert!(
            g.spread[2][2] < 0.02 * g.gram[0][0].norm(),
            "suppressed diagonal spread {} vs leading scale {}",
            g.spread[2][2],
            g.gram[0][0].norm()
        );

        // renormalization: triangular by construction, identity in the
        // arithmetic of the measured Gram, literal base case
        let t = &res.transform;
        assert!((t[0][0] - Complex64::new(1.0, 0.0) / g.gram[0][0]).norm() < 1e-14);
        for m in 0..3 {
            for n in 0..3 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in n..=m.min(2) {
                    s += g.gram[n][k] * t[k][m];
                }
                let want = if n == m { 1.0 } else { 0.0 };
                assert!(
                    (s - want).norm() < 1e-8,
                    "renormalized gram ({n},{m}) = {s}"
                );
            }
            assert_eq!(res.renormalized[m].coeffs.len(), inc.models.len());
            for k in m + 1..3 {
                assert_eq!(res.renormalized[m].coeffs[k].norm(), 0.0);
            }
        }
    }

    #[test]
    fn degenerate_diagonals_are_rejected() {
        let g = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.2)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1e-12, 0.0)],
        ];
        let err = biorthogonalize_gram(&g, &cfg()).unwrap_err();
        match err {
            Error::SingularDiagonal { index, value } => {
                assert_eq!(index, 1);
                assert!(value < 1e-11);
            }
            other => panic!("expected SingularDiagonal, got {other}"),
        }
    }
}
