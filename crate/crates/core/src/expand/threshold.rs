//! Eigenfunction model at a degenerate center (r1 = r2 = 1/2), where the
//! profile spreads logarithmically instead of sitting in a parabolic well:
//!
//! ```text
//! u = e^{i Phi(y)/x} x^beta L^{-1/2} e^{i nu_t Y^2 / (4L)} g(-Y/L),
//! ```
//!
//! with L = -log x, Y = (y - y_c)/sqrt(x), beta = 1/4 + i V1(y_c)/(2 nu_t)
//! and g Schwartz. The form is leading order in 1/L, so it only makes sense
//! on collars reaching well below x = 1.

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::expand::Profile;
use crate::grid::CollarGrid;
use crate::legendrian::{phase_jet, LegendrePhase};

/// Smallest -log(x_min) on which the logarithmic profile is resolvable.
pub const MIN_LOG_DEPTH: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct ThresholdExpansion {
    pub q: RadialPoint,
    /// Phase jet of the (double) branch r = 1/2.
    pub phase: LegendrePhase,
    pub beta: Complex64,
    pub profile: Profile,
}

pub fn threshold_expansion(
    q: &RadialPoint,
    profile: Profile,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<ThresholdExpansion> {
    if q.kind != RadialKind::DegenerateCenter {
        return Err(Error::WrongKind(format!(
            "threshold expansion needs a degenerate center, got {}",
            q.kind
        )));
    }
    // With r = 1/2 the jet divisors 2 nu_t (1 - m/2) are nonzero for m >= 3,
    // so the phase jet always solves.
    let phase = phase_jet(q, 1, cfg.n_jet, b, cfg)?;
    let beta = Complex64::new(0.25, b.v1(q.crit.y_c) / (2.0 * q.nu_t));
    Ok(ThresholdExpansion {
        q: *q,
        phase,
        beta,
        profile,
    })
}

impl ThresholdExpansion {
    /// Field value at x and centered offset dy = y - y_c. Requires x < 1.
    pub fn eval(&self, x: f64, dy: f64) -> Complex64 {
        let l = -x.ln();
        let nu = self.q.nu_t;
        let (phi, _) = self.phase.eval_jet(dy);
        let yy = dy / x.sqrt();
        let outer = Complex64::new(0.0, phi / x).exp();
        let xb = (self.beta * x.ln()).exp();
        let chirp = Complex64::new(0.0, nu * yy * yy / (4.0 * l)).exp();
        outer * xb * chirp * self.profile.eval(-yy / l) / l.sqrt()
    }
}

pub fn build_threshold_eigenfunction(
    exp: &ThresholdExpansion,
    b: &BoundaryData,
    grid: (f64, f64, usize, usize),
    cfg: &Config,
) -> Result<CollarGrid> {
    let (x_min, x_max, nx, ny) = grid;
    if x_max >= 1.0 {
        return Err(Error::Invalid(format!(
            "logarithmic profile undefined at x >= 1 (x_max = {x_max})"
        )));
    }
    if -x_min.ln() < MIN_LOG_DEPTH {
        return Err(Error::GridTooCoarse(format!(
            "-log(x_min) = {:.2} < {MIN_LOG_DEPTH}: the logarithmic spreading is unresolved",
            -x_min.ln()
        )));
    }
    let _ = cfg;
    let mut g = CollarGrid::new(b, exp.q.lambda, x_min, x_max, nx, ny)?;
    let y_c = exp.q.crit.y_c;
    let circ = b.circumference;
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
