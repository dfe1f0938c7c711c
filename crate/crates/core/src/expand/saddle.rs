//! Model hierarchies at a saddle radial point (real roots r1 < 0 < 1 < r2).
//!
//! Conjugating P - lambda by the branch phase and a power of x,
//!
//! ```text
//! (P - lambda) [ e^{i Phi(y)/x} x^beta w ] = e^{i Phi(y)/x} x^{beta+1} A w,
//! ```
//!
//! gives, with Phi = nu_t + sum_{p>=2} c_p y^p the branch-b jet and
//! beta = r_other/2 + i V1(y_c)/(2 nu_t),
//!
//! ```text
//! A = 2 i nu_t (d/ds + r_b y d/dy)                    (A0)
//!   + 2 i phi (d/ds + beta)                            (C1)
//!   - 2 i (phi' - 2 c2 y) d/dy                         (C2)
//!   - i (phi + phi'' - 2 c2)                           (C3)
//!   + (V1(y) - V1(y_c))                                (C4)
//!   - x ((d/ds + beta)^2 + d^2/dy^2)                   (C5)
//!   + x^{-1} E(y),
//! ```
//!
//! where s = log x, phi = Phi - nu_t, and E is the eikonal defect of the
//! truncated jet (y-order above the jet: excluded from the algebra, it sets
//! a documented residual floor). A0 annihilates exactly the monomials
//! (y x^{-r_b})^n, so each model starts from one of them and the corrections
//! are solved term by term on the exponent lattice x^{k + j r_b} y^m: every
//! piece shifts the integer pair (k, m) only, and A0 acts diagonally with
//! eigenvalue 2 i nu_t (k + r_b (j + m)).

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::CollarGrid;
use crate::legendrian::{phase_jet, LegendrePhase};
use crate::series::PowerSeries;

/// Phase jet order for the saddle branches (both are marchable, but the
/// series algebra wants the defect floor pushed well below the fit window).
const SADDLE_JET_ORDER: usize = 16;

/// y-degree cap for the model series. On a window |y - y_c| <= w the dropped
/// terms are O(w^m), far below every tolerance here for w <= 0.5.
const M_CAP: u32 = 100;

/// Truncation budget of the incoming correction tower. The dominant ladder
/// multiplies (ctilde Y^2)^M / M! per rung in the blow-up variable
/// Y = dy x^{-r}, so with M_CAP rungs available the partial sums stay an
/// honest asymptotic evaluation only while ctilde Y^2 stays below roughly
/// (M! eps)^(1/M) with M = M_CAP/2; past that the tail dominates. The
/// budget and the cap move together: 16 with M = 50 rungs leaves a tail
/// 16^50/50! ~ 5e-5 at the window edge. Wide windows matter because flux
/// pairings against these fields integrate over a stationary-phase width
/// sqrt(2x/(nu (r2-r1))) that the window must cover with room to spare.
const TOWER_BUDGET: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleDirection {
    /// Models on the lattice of the decaying branch r1 < 0.
    Outgoing,
    /// Models on the lattice of the growing branch r2 > 1.
    Incoming,
}

#[derive(Debug, Clone)]
pub struct SaddleSeries {
    pub q: RadialPoint,
    pub direction: SaddleDirection,
    /// Conjugation exponent r_other/2 + i V1(y_c)/(2 nu_t).
    pub beta: Complex64,
    /// Branch jet: 1 (outgoing) or 2 (incoming).
    pub phase: LegendrePhase,
    /// Lattice generator: r1 (outgoing) or r2 (incoming).
    pub r: f64,
    /// Model n starts from (y x^{-r})^n; corrections solved to `order` rounds.
    pub models: Vec<PowerSeries>,
    /// Combination coefficients a_n for field assembly (default: all one).
    pub coeffs: Vec<Complex64>,
    /// (model, x-exponent) of terms dropped because the A0 eigenvalue
    /// vanished to resonance_tol there.
    pub flagged: Vec<(usize, f64)>,
    /// Taylor coefficients of V1 at y_c (the C4 multiplier).
    wtay: Vec<f64>,
}

/// C-infinity window edge: 1 for t <= 0.6, 0 for t >= 1. Fields built from
/// polynomial models must not stop with a jump — the spectral y-derivative
/// of the operator is global and a jump would contaminate every column.
fn edge_taper(t: f64) -> f64 {
    let f = |z: f64| if z > 0.0 { (-1.0 / z).exp() } else { 0.0 };
    let u = (1.0 - t) / 0.4;
    if u >= 1.0 {
        1.0
    } else if u <= 0.0 {
        0.0
    } else {
        f(u) / (f(u) + f(1.0 - u))
    }
}

impl SaddleSeries {
    #[cfg(test)]
    fn nu(&self) -> f64 {
        self.q.nu_t
    }

    /// A0 applied coefficient-wise: diagonal with eigenvalue
    /// 2 i nu_t (k + r (j + m)).
    #[cfg(test)]
    fn apply_a0(&self, s: &PowerSeries) -> PowerSeries {
        let mut out = PowerSeries::new(s.r);
        for (&(k, j, m), &c) in &s.terms {
            let lam = 2.0 * self.nu() * (k as f64 + s.r * (j as f64 + m as f64));
            out.add_term((k, j, m), c * Complex64::new(0.0, lam));
        }
        out
    }

    /// The correction part C = A - A0 - x^{-1} E, term by term.
    fn apply_corrections(&self, s: &PowerSeries) -> PowerSeries {
        let jet = &self.phase.jet;
        let pmax = jet.len() - 1;
        let mut out = PowerSeries::new(s.r);
        for (&(k, j, m), &c) in &s.terms {
            let a = Complex64::new(k as f64 + j as f64 * s.r, 0.0);
            let ab = a + self.beta;
            // C1: 2 i c_p (a + beta) y^p
            for (p, &cp) in jet.iter().enumerate().skip(2) {
                if cp != 0.0 && m + (p as u32) <= M_CAP {
                    out.add_term(
                        (k, j, m + p as u32),
                        c * ab * Complex64::new(0.0, 2.0 * cp),
                    );
                }
            }
            // C2: -2 i p c_p m y^{m + p - 2}, p >= 3
            if m >= 1 {
                for (p, &cp) in jet.iter().enumerate().skip(3) {
                    let mm = m + p as u32 - 2;
                    if cp != 0.0 && mm <= M_CAP {
                        out.add_term(
                            (k, j, mm),
                            c * Complex64::new(0.0, -2.0 * p as f64 * cp * m as f64),
                        );
                    }
                }
            }
            // C3: -i (c_p [p>=2] + (p+2)(p+1) c_{p+2}) y^p, p >= 1
            for p in 1..=pmax {
                let mut gp = if p >= 2 { jet[p] } else { 0.0 };
                if p + 2 <= pmax {
                    gp += ((p + 2) * (p + 1)) as f64 * jet[p + 2];
                }
                if gp != 0.0 && m + (p as u32) <= M_CAP {
                    out.add_term((k, j, m + p as u32), c * Complex64::new(0.0, -gp));
                }
            }
            // C4: (V1 - V1(y_c)) Taylor
            for (p, &wp) in self.wtay.iter().enumerate().skip(1) {
                if wp != 0.0 && m + (p as u32) <= M_CAP {
                    out.add_term((k, j, m + p as u32), c * wp);
                }
            }
            // C5: -x ((d/ds + beta)^2 + d^2/dy^2)
            out.add_term((k + 1, j, m), -c * ab * ab);
            if m >= 2 {
                out.add_term((k + 1, j, m - 2), -c * ((m * (m - 1)) as f64));
            }
        }
        out
    }

    /// Full conjugated operator except the excluded x^{-1} E(y) tail.
    #[cfg(test)]
    fn apply_conjugated(&self, s: &PowerSeries) -> PowerSeries {
        let mut out = self.apply_a0(s);
        out.add(&self.apply_corrections(s));
        out
    }

    pub fn with_coeffs(mut self, coeffs: Vec<Complex64>) -> Self {
        self.coeffs = coeffs;
        self
    }

    /// Sum of the weighted models at x and centered offset dy (no phase).
    pub fn profile_at(&self, x: f64, dy: f64) -> Complex64 {
        self.models
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(mdl, a)| a * mdl.eval(x, dy))
            .sum()
    }

    /// Field value e^{i Phi/x} x^beta sum a_n v_n at x, centered offset dy.
    pub fn eval(&self, x: f64, dy: f64) -> Complex64 {
        let (phi, _) = self.phase.eval_jet(dy);
        Complex64::new(0.0, phi / x).exp() * (self.beta * x.ln()).exp() * self.profile_at(x, dy)
    }

    /// Build the field on a collar grid, zero outside |y - y_c| <= y_halfwidth.
    /// The models are polynomial — they only mean anything near the saddle —
    /// so the values taper smoothly from 1 to 0 over the outer 40% of the
    /// window instead of stopping with a jump.
    pub fn build_field(
        &self,
        b: &BoundaryData,
        grid: (f64, f64, usize, usize),
        y_halfwidth: f64,
    ) -> Result<CollarGrid> {
        let (x_min, x_max, nx, ny) = grid;
        if !(y_halfwidth > 0.0) {
            return Err(Error::Invalid("y_halfwidth must be positive".into()));
        }
        // Incoming amplitudes are asymptotic in the blow-up variable
        // Y = dy x^{-r2}; the field is windowed where the truncated tower
        // stops being an honest evaluation (see TOWER_BUDGET). Outgoing
        // amplitudes see |Y| <= y_halfwidth x^{|r1|} and never need this.
        let yy_win = match self.direction {
            SaddleDirection::Outgoing => f64::INFINITY,
            SaddleDirection::Incoming => {
                let m_max = self
                    .coeffs
                    .iter()
                    .rposition(|c| c.norm() > 0.0)
                    .unwrap_or(0) as f64;
                let ctilde = (m_max * self.r.abs() + self.beta.norm()) / 4.0;
                (TOWER_BUDGET / ctilde.max(1e-6)).sqrt()
            }
        };
        let mut g = CollarGrid::new(b, self.q.lambda, x_min, x_max, nx, ny)?;
        let y_c = self.q.crit.y_c;
        let circ = b.circumference;
        let r = self.r;
        g.fill(|x, y| {
            let mut dy = (y - y_c) % circ;
            if dy > circ / 2.0 {
                dy -= circ;
            }
            if dy < -circ / 2.0 {
                dy += circ;
            }
            let mut t = edge_taper(dy.abs() / y_halfwidth);
            if yy_win.is_finite() && t != 0.0 {
                t *= edge_taper(dy.abs() / (yy_win * x.powf(r)));
            }
            if t == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.eval(x, dy) * t
            }
        });
        Ok(g)
    }
}

/// Build the model hierarchy v_0 .. v_{n_max-1} in the given direction.
/// `order` is the number of correction rounds: each round solves every term
/// of the current residual against the diagonal A0 (dropping, and flagging,
/// terms whose A0 eigenvalue vanishes to resonance_tol) and replaces the
/// residual with the corrections of the newly added terms.
pub fn saddle_models(
    q: &RadialPoint,
    direction: SaddleDirection,
    n_max: usize,
    order: usize,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<SaddleSeries> {
    if q.kind != RadialKind::Saddle {
        return Err(Error::WrongKind(format!(
            "saddle models need a saddle, got {}",
            q.kind
        )));
    }
    if n_max == 0 {
        return Err(Error::Invalid("n_max must be at least 1".into()));
    }
    let (branch, rb, rother) = match direction {
        SaddleDirection::Outgoing => (1, q.r1.re, q.r2.re),
        SaddleDirection::Incoming => (2, q.r2.re, q.r1.re),
    };
    // The jet divisors 2 nu_t (1 - m r_b) never vanish for a saddle: r1 < 0
    // keeps them positive, r2 > 1 keeps them negative from m = 1 on.
    let phase = phase_jet(q, branch, cfg.n_jet.max(SADDLE_JET_ORDER), b, cfg)?;
    let y_c = q.crit.y_c;
    let beta = Complex64::new(rother / 2.0, b.v1(y_c) / (2.0 * q.nu_t));
    let jet_order = phase.jet.len() - 1;
    let mut out = SaddleSeries {
        q: *q,
        direction,
        beta,
        phase,
        r: rb,
        models: Vec::new(),
        coeffs: vec![Complex64::new(1.0, 0.0); n_max],
        flagged: Vec::new(),
        wtay: b.v1_coeffs.taylor(y_c, jet_order),
    };
    let nu = q.nu_t;
    for n in 0..n_max {
        let mut model = PowerSeries::monomial(
            rb,
            0,
            -(n as i32),
            n as u32,
            Complex64::new(1.0, 0.0),
        );
        let mut resid = out.apply_corrections(&model);
        for _ in 0..order {
            let mut fresh = PowerSeries::new(rb);
            for (&(k, j, m), &c) in &resid.terms {
                let gap = k as f64 + rb * (j as f64 + m as f64);
                let scale = 1.0 + k.unsigned_abs() as f64 + (j as f64 + m as f64).abs();
                if gap.abs() < cfg.resonance_tol * scale {
                    out.flagged.push((n, k as f64 + j as f64 * rb));
                    continue;
                }
                // A0 (solution term) = -residual term
                fresh.add_term((k, j, m), -c / Complex64::new(0.0, 2.0 * nu * gap));
            }
            model.add(&fresh);
            resid = out.apply_corrections(&fresh);
        }
        model.prune(1e-300); // drop exact cancellations only
        out.models.push(model);
    }
    Ok(out)
}
