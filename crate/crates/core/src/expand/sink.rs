//! Eigenfunction model at a sink or source radial point (real roots
//! 0 < r1 <= r2 < 1 of r^2 - r + a/nu_t^2 = 0):
//!
//! ```text
//! u = e^{i Phi(y)/x} x^beta u0(Y),      Y = (y - y_c) / x^{r1},
//! beta = r2/2 + i V1(y_c) / (2 nu_t),
//! ```
//!
//! where Phi is the slow-branch phase and u0 is Schwartz. When 1/r1 is an
//! integer N the phase jet is obstructed at order N and the ansatz picks up
//! the extra unimodular factor x^{-i c Y^N} = e^{-i c Y^N log x}, with c the
//! leading Taylor coefficient of the eikonal defect of the truncated jet.
//!
//! Corrections to this leading form arrive at the x-exponent gaps
//! {r1, 1, 2 r2 - 1, r2}; the smallest of them limits how fast the operator
//! residual of the built field can decay.

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::expand::Profile;
use crate::grid::CollarGrid;
use crate::legendrian::{phase_jet, phase_jet_truncated, LegendrePhase};

/// Order of the slow-branch jet used to evaluate the phase across the profile
/// support. The slow branch cannot be marched stably (the fast mode grows
/// like y^{r2/r1}), so the jet must carry the accuracy; the builder checks
/// its eikonal residual at the edge of the support.
const SINK_JET_ORDER: usize = 40;

/// Eikonal residual allowed at the support edge of the profile.
const JET_EDGE_TOL: f64 = 1e-6;

impl Profile {
    /// Radius beyond which the profile is below double precision.
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Gaussian { sigma, center } => center.abs() + 14.0 * sigma,
            Profile::Oscillator { alpha, j } => {
                ((2.0 * *j as f64 + 1.0).sqrt() + 10.0) / alpha.sqrt()
            }
            Profile::OscillatorSum { alpha, coeffs } => {
                ((2.0 * coeffs.len() as f64 + 1.0).sqrt() + 10.0) / alpha.sqrt()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SinkExpansion {
    pub q: RadialPoint,
    pub beta: Complex64,
    /// Slow-branch phase jet (truncated below order N in the resonant case).
    pub phase: LegendrePhase,
    pub profile: Profile,
    /// Sorted x-exponent gaps of the subleading corrections.
    pub index_set: Vec<f64>,
    /// Resonant log-phase constant; required iff q.resonant.
    pub resonant_c: Option<f64>,
}

/// The resonant constant: the order-N Taylor coefficient of the eikonal
/// defect of the truncated slow-branch jet (the "c y^N / x" forcing).
pub fn resonant_defect_c(q: &RadialPoint, b: &BoundaryData, cfg: &Config) -> Result<f64> {
    if q.kind != RadialKind::SinkOrSource || !q.resonant {
        return Err(Error::Invalid(
            "resonant constant is only defined at a resonant sink or source".into(),
        ));
    }
    let n = (1.0 / q.r1.re).round() as usize;
    let phase = phase_jet_truncated(q, 1, n + 1, b, cfg)?;
    match phase.obstruction {
        Some(o) => Ok(o.defect),
        None => Err(Error::Invalid(
            "expected a resonant obstruction but the jet solved".into(),
        )),
    }
}

pub fn sink_expansion(
    q: &RadialPoint,
    profile: Profile,
    resonant_c: Option<f64>,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<SinkExpansion> {
    if q.kind != RadialKind::SinkOrSource {
        return Err(Error::WrongKind(format!(
            "sink expansion needs a sink or source, got {}",
            q.kind
        )));
    }
    let (r1, r2) = (q.r1.re, q.r2.re);
    let phase = if q.resonant {
        if resonant_c.is_none() {
            return Err(Error::MissingResonantC {
                n: (1.0 / r1).round() as u32,
            });
        }
        let n = (1.0 / r1).round() as usize;
        phase_jet_truncated(q, 1, n + 1, b, cfg)?
    } else {
        phase_jet(q, 1, cfg.n_jet.max(SINK_JET_ORDER), b, cfg)?
    };
    let beta = Complex64::new(r2 / 2.0, b.v1(q.crit.y_c) / (2.0 * q.nu_t));
    let mut index_set = vec![r1, 1.0, 2.0 * r2 - 1.0, r2];
    index_set.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SinkExpansion {
        q: *q,
        beta,
        phase,
        profile,
        index_set,
        resonant_c,
    })
}

impl SinkExpansion {
    /// Field value at x and centered offset dy = y - y_c. Points beyond the
    /// profile support return zero without touching the phase jet (the jet
    /// is only accurate near the radial point).
    pub fn eval(&self, x: f64, dy: f64) -> Complex64 {
        let r1 = self.q.r1.re;
        let yy = dy / x.powf(r1);
        if yy.abs() > self.profile.support_radius() {
            return Complex64::new(0.0, 0.0);
        }
        let (phi, _) = self.phase.eval_jet(dy);
        let mut u = Complex64::new(0.0, phi / x).exp()
            * (self.beta * x.ln()).exp()
            * self.profile.eval(yy);
        if let Some(c) = self.resonant_c {
            let n = (1.0 / r1).round() as i32;
            u *= Complex64::new(0.0, -c * yy.powi(n) * x.ln()).exp();
        }
        u
    }
}

pub fn build_sink_eigenfunction(
    exp: &SinkExpansion,
    b: &BoundaryData,
    grid: (f64, f64, usize, usize),
    cfg: &Config,
) -> Result<CollarGrid> {
    let (x_min, x_max, nx, ny) = grid;
    let r1 = exp.q.r1.re;
    let reach = exp.profile.support_radius() * x_max.powf(r1);
    let circ = b.circumference;
    if reach > circ / 2.0 {
        return Err(Error::Invalid(format!(
            "profile support reaches |y - y_c| = {reach:.2}, beyond the fundamental domain"
        )));
    }
    if !exp.profile.is_zero() {
        // the jet must still satisfy the eikonal equation at the support edge
        let (p, d) = exp.phase.eval_jet(reach);
        let y_edge = exp.q.crit.y_c + reach;
        let res = (p * p + d * d + b.v0(y_edge) - exp.q.lambda).abs();
        let scale = 1.0 + exp.q.lambda.abs();
        if res > JET_EDGE_TOL * scale && exp.resonant_c.is_none() {
            return Err(Error::Invalid(format!(
                "phase jet residual {res:.3e} at the support edge |dy| = {reach:.3}"
            )));
        }
    }
    let _ = cfg;
    let mut g = CollarGrid::new(b, exp.q.lambda, x_min, x_max, nx, ny)?;
    let y_c = exp.q.crit.y_c;
    g.fill(|x, y| {
        let mut dy = (y - y_c) % circ;
        if dy > circ / 2.0 {
            dy -= circ;
        }
        if dy < -circ / 2.0 {
            dy += circ;
        }
        exp.eval(x, dy)
    });
    Ok(g)
}
