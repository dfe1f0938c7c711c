//! Expansion at a center-type radial point (minimum below the Hessian
//! threshold).
//!
//! In the blow-up variable Y = (y−y_c)/√x the operator reduces to the
//! quadratic model
//!
//!   Q = D_Y² + (ν̃/2)(Y D_Y + D_Y Y) + (V₀″/2) Y²,
//!
//! whose spectrum is β_j = α(2j+1), α = √(V₀″/2 − ν̃²/4), with
//! eigenfunctions v_j(Y) = e^{−iν̃Y²/4} ψ_j(Y; α): the oscillating Gaussian
//! factor turns Q into the harmonic oscillator −∂_Y² + α²Y². The full
//! eigenfunction is the mode sum
//!
//!   u = e^{iν̃/x} Σ_j x^{1/4} x^{i(β_j + V₁(y_c))/(2ν̃)} γ_j v_j(Y).

use num_complex::Complex64;

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::CollarGrid;
use crate::hermite;

#[derive(Debug, Clone)]
pub struct CenterExpansion {
    pub q: RadialPoint,
    pub alpha: f64,
    /// β_j = α(2j+1), j < j_max
    pub betas: Vec<f64>,
    /// mode coefficients; len ≤ betas.len()
    pub gammas: Vec<Complex64>,
}

/// Modes and eigenvalues at an outgoing center.
pub fn center_modes(q: &RadialPoint, j_max: usize) -> Result<CenterExpansion> {
    if q.kind != RadialKind::Center {
        return Err(Error::NotCenter);
    }
    let a2 = q.crit.hessian / 2.0 - q.nu_t * q.nu_t / 4.0;
    if a2 <= 0.0 {
        return Err(Error::NotCenter);
    }
    let alpha = a2.sqrt();
    let betas = (0..j_max).map(|j| alpha * (2 * j + 1) as f64).collect();
    Ok(CenterExpansion {
        q: *q,
        alpha,
        betas,
        gammas: Vec::new(),
    })
}

impl CenterExpansion {
    pub fn with_gammas(mut self, gammas: Vec<Complex64>) -> Self {
        self.gammas = gammas;
        self
    }

    /// v_j(Y) = e^{−iν̃Y²/4} ψ_j(Y; α): orthonormal eigenfunctions of Q.
    pub fn mode(&self, j: usize, yy: f64) -> Complex64 {
        let twist = Complex64::new(0.0, -self.q.nu_t * yy * yy / 4.0).exp();
        twist * hermite::psi(j, self.alpha, yy)
    }

    /// All modes at once (shares the recurrence).
    pub fn modes_at(&self, yy: f64) -> Vec<Complex64> {
        let twist = Complex64::new(0.0, -self.q.nu_t * yy * yy / 4.0).exp();
        hermite::psi_all(self.betas.len(), self.alpha, yy)
            .into_iter()
            .map(|p| twist * p)
            .collect()
    }
}

/// Evaluate the truncated mode sum on the grid.
pub fn build_center_eigenfunction(
    exp: &CenterExpansion,
    b: &BoundaryData,
    grid_spec: (f64, f64, usize, usize),
    cfg: &Config,
) -> Result<CollarGrid> {
    if exp.gammas.len() > exp.betas.len() {
        return Err(Error::Invalid(
            "more coefficients than computed modes".into(),
        ));
    }
    // the truncation is only trustworthy if the sequence has visibly
    // decayed by the last retained mode
    let gmax = exp.gammas.iter().map(|g| g.norm()).fold(0.0f64, f64::max);
    if exp.gammas.len() == exp.betas.len() && gmax > 0.0 {
        let tail = exp.gammas.last().unwrap().norm();
        if tail > cfg.series_tol * gmax {
            return Err(Error::TailTooLarge {
                tail,
                tol: cfg.series_tol * gmax,
                order: exp.gammas.len() - 1,
            });
        }
    }
    let (x_min, x_max, nx, ny) = grid_spec;
    let mut g = CollarGrid::new(b, exp.q.lambda, x_min, x_max, nx, ny)?;
    let nu = exp.q.nu_t;
    let v1 = exp.q.crit.v1;
    let y_c = exp.q.crit.y_c;
    let circ = b.circumference;
    let nyv = g.ny();
    for i in 0..g.nx() {
        let x = g.x[i];
        let lx = x.ln();
        let sqx = x.sqrt();
        let outer = Complex64::new(0.0, nu / x).exp() * x.powf(0.25);
        // per-mode unimodular factor x^{i(β_j+V₁)/(2ν̃)}
        let phases: Vec<Complex64> = exp
            .betas
            .iter()
            .take(exp.gammas.len())
            .map(|&bj| Complex64::new(0.0, (bj + v1) / (2.0 * nu) * lx).exp())
            .collect();
        for j in 0..nyv {
            let mut dy = (g.y[j] - y_c) % circ;
            if dy > circ / 2.0 {
                dy -= circ;
            } else if dy < -circ / 2.0 {
                dy += circ;
            }
            let yy = dy / sqx;
            let twist = Complex64::new(0.0, -nu * yy * yy / 4.0).exp();
            let psis = hermite::psi_all(exp.gammas.len(), exp.alpha, yy);
            let mut sum = Complex64::new(0.0, 0.0);
            for (k, &gk) in exp.gammas.iter().enumerate() {
                sum += gk * phases[k] * twist * psis[k];
            }
            let idx = g.idx(i, j);
            g.values[idx] = outer * sum;
        }
    }
    Ok(g)
}
