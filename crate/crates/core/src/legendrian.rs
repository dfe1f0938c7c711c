//! Legendre phase functions Phi(y): graphs of the invariant curves of the
//! boundary flow through a radial point. Phi solves the eikonal equation
//! Phi^2 + (Phi')^2 + V0 - lambda = 0 with Phi(y_c) = nu_t, Phi'(y_c) = 0,
//! Phi''(y_c) = -nu_t * r_branch. Near the critical point the equation is a
//! degenerate equilibrium, so the curve is started from a Taylor jet and
//! continued by ODE integration away from it.

use crate::boundary::BoundaryData;
use crate::classical::{RadialKind, RadialPoint};
use crate::config::Config;
use crate::error::{Error, Result};

/// Resonant truncation data: the jet could not be solved past `order`, and the
/// eikonal defect of the truncated phase has leading Taylor coefficient
/// `defect` at that order (the "c y^N / x" forcing of the resonant expansion).
#[derive(Debug, Clone, Copy)]
pub struct Obstruction {
    pub order: usize,
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct LegendrePhase {
    pub base: RadialPoint,
    /// 1 or 2: which root r_j sets the curvature Phi'' = -nu_t r_branch.
    pub branch: usize,
    /// Taylor coefficients of Phi about y_c.
    pub jet: Vec<f64>,
    /// Uniform-y samples (y, Phi, Phi'), possibly truncated at folds.
    pub curve: Vec<(f64, f64, f64)>,
    /// y-locations where continuation stopped because the curve folds.
    pub folds: Vec<f64>,
    pub obstruction: Option<Obstruction>,
}

fn branch_r(q: &RadialPoint, branch: usize) -> Result<f64> {
    let r = match branch {
        1 => q.r1,
        2 => q.r2,
        _ => return Err(Error::Invalid(format!("branch must be 1 or 2, got {branch}"))),
    };
    if r.im != 0.0 {
        return Err(Error::NotCenter);
    }
    Ok(r.re)
}

/// Taylor coefficients of the eikonal solution, stopping early at a resonant
/// obstruction. Coefficient m >= 3 solves D c_m = -R_m with
/// D = 2 c_0 + 4 m c_2 = 2 nu_t (1 - m r_branch), so the solve degenerates
/// exactly when 1/r_branch is an integer.
fn jet_coeffs(
    q: &RadialPoint,
    branch: usize,
    n_jet: usize,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<(Vec<f64>, Option<Obstruction>)> {
    if q.kind == RadialKind::Center {
        return Err(Error::NotCenter);
    }
    let r = branch_r(q, branch)?;
    let nu = q.nu_t;
    let v = b.v0_coeffs.taylor(q.crit.y_c, n_jet);
    let mut c = vec![nu, 0.0, -nu * r / 2.0];
    for m in 3..=n_jet {
        // F_m assembled with c_m = 0; the c_{m+1} term carries a factor c_1 = 0
        let mut rm = v[m] + if m == 0 { -q.lambda } else { 0.0 };
        for i in 0..=m {
            let j = m - i;
            if i < c.len() && j < c.len() {
                rm += c[i] * c[j];
            }
        }
        for i in 0..=m {
            let j = m - i;
            if i + 1 < c.len() && j + 1 < c.len() {
                rm += ((i + 1) * (j + 1)) as f64 * c[i + 1] * c[j + 1];
            }
        }
        let d = 2.0 * c[0] + 4.0 * m as f64 * c[2];
        if d.abs() < cfg.resonance_tol * 2.0 * nu.abs() * (1.0 + m as f64 * r.abs()) {
            return Ok((c, Some(Obstruction { order: m, defect: rm })));
        }
        c.push(-rm / d);
    }
    Ok((c, None))
}

/// Phase jet at a non-center radial point. Errors on a resonant obstruction;
/// use `phase_jet_truncated` to keep the truncated jet and its defect.
pub fn phase_jet(
    q: &RadialPoint,
    branch: usize,
    n_jet: usize,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<LegendrePhase> {
    let (jet, obstruction) = jet_coeffs(q, branch, n_jet, b, cfg)?;
    if let Some(o) = obstruction {
        return Err(Error::ResonantObstruction {
            order: o.order,
            gap: (1.0 - o.order as f64 * branch_r(q, branch)?).abs(),
        });
    }
    Ok(LegendrePhase {
        base: *q,
        branch,
        jet,
        curve: Vec::new(),
        folds: Vec::new(),
        obstruction: None,
    })
}

/// Phase jet that stops below the resonant order and records the eikonal
/// defect there (the resonant sink expansion consumes it).
pub fn phase_jet_truncated(
    q: &RadialPoint,
    branch: usize,
    n_jet: usize,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<LegendrePhase> {
    let (jet, obstruction) = jet_coeffs(q, branch, n_jet, b, cfg)?;
    Ok(LegendrePhase {
        base: *q,
        branch,
        jet,
        curve: Vec::new(),
        folds: Vec::new(),
        obstruction,
    })
}

impl LegendrePhase {
    /// (Phi, Phi') from the jet at offset dy = y - y_c (Horner).
    pub fn eval_jet(&self, dy: f64) -> (f64, f64) {
        let mut phi = 0.0;
        let mut dphi = 0.0;
        for (m, &c) in self.jet.iter().enumerate().rev() {
            phi = phi * dy + c;
            if m >= 1 {
                dphi = dphi * dy + m as f64 * c;
            }
        }
        (phi, dphi)
    }

    /// (Phi, Phi') anywhere on the continued curve: jet inside the handoff
    /// radius, cubic Hermite interpolation of the curve samples outside it.
    pub fn eval(&self, y: f64, cfg: &Config) -> Result<(f64, f64)> {
        let dy = y - self.base.crit.y_c;
        if dy.abs() <= cfg.jet_handoff {
            return Ok(self.eval_jet(dy));
        }
        if self.curve.len() < 2 {
            return Err(Error::Invalid(
                "phase curve not continued over the requested point".into(),
            ));
        }
        let y0 = self.curve[0].0;
        let h = self.curve[1].0 - y0;
        let pos = (y - y0) / h;
        if pos < 0.0 || pos > (self.curve.len() - 1) as f64 {
            return Err(Error::FoldDetected { y, dy: 0.0 });
        }
        let i = (pos.floor() as usize).min(self.curve.len() - 2);
        let t = pos - i as f64;
        let (_, p0, d0) = self.curve[i];
        let (_, p1, d1) = self.curve[i + 1];
        // cubic Hermite with exact derivative data: O(h^4)
        let (t2, t3) = (t * t, t * t * t);
        let phi = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * h * d1;
        // derivative of the same interpolant
        let dphi = (6.0 * t2 - 6.0 * t) * p0 / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * p1 / h
            + (3.0 * t2 - 2.0 * t) * d1;
        Ok((phi, dphi))
    }

    /// Largest eikonal residual |Phi^2 + Phi'^2 + V0 - lambda| over the curve.
    pub fn max_residual(&self, b: &BoundaryData) -> f64 {
        self.curve
            .iter()
            .map(|&(y, p, d)| (p * p + d * d + b.v0(y) - self.base.lambda).abs())
            .fold(0.0, f64::max)
    }
}

/// Continue the phase over [y_lo, y_hi] (which must contain y_c) on n uniform
/// nodes. Inside jet_handoff of y_c nodes are evaluated from the jet; outside,
/// the graph ODE dPhi/dy = Phi', dPhi'/dy = -(V0' + 2 Phi Phi')/(2 Phi') is
/// integrated node to node with adaptive RK4. Where |dy/dt| = |2 Phi'| drops
/// below fold_tol the curve ceases to be a graph and is truncated (recorded in
/// `folds`, not an error).
///
/// Branch-stability caveat: marching branch b away from the radial point is
/// well-posed only when the off-branch mode grows slower than the curve
/// itself, i.e. when r_other / r_b < 1. At a sink the slow branch (r1) fails
/// this badly - errors amplify like y^(r2/r1) and no double-precision march
/// can hold the curve - so for r_other/r_b > 1 the curve is evaluated from
/// the (convergent) Taylor jet instead, truncated where the jet stops
/// satisfying the eikonal equation to eik_tol.
pub fn continue_phase(
    phase: &LegendrePhase,
    b: &BoundaryData,
    y_lo: f64,
    y_hi: f64,
    n: usize,
    cfg: &Config,
) -> Result<LegendrePhase> {
    let y_c = phase.base.crit.y_c;
    if !(y_lo < y_c && y_c < y_hi) || n < 8 {
        return Err(Error::Invalid(
            "continuation interval must straddle y_c with n >= 8".into(),
        ));
    }
    if phase.jet.len() < 5 {
        return Err(Error::Invalid("jet must be available to order >= 4".into()));
    }
    let h = (y_hi - y_lo) / (n - 1) as f64;
    let mut out = phase.clone();
    out.curve.clear();
    out.folds.clear();

    let nodes: Vec<f64> = (0..n).map(|i| y_lo + i as f64 * h).collect();
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    let mut folds = Vec::new();

    let r_b = branch_r(&phase.base, phase.branch)?;
    let r_other = branch_r(&phase.base, 3 - phase.branch)?;
    let march_is_stable = r_other / r_b <= 1.0 + 1e-9;
    let lambda = phase.base.lambda;

    // rightward sweep from the handoff, then leftward; jet zone filled directly
    for &dir in &[1.0f64, -1.0] {
        let mut state: Option<(f64, f64, f64)> = None; // (y, phi, dphi)
        let idx: Vec<usize> = if dir > 0.0 {
            (0..n).filter(|&i| nodes[i] > y_c).collect()
        } else {
            (0..n).filter(|&i| nodes[i] < y_c).rev().collect()
        };
        for i in idx {
            let y = nodes[i];
            let dy = y - y_c;
            if dy.abs() <= cfg.jet_handoff {
                let (p, d) = phase.eval_jet(dy);
                samples.push((y, p, d));
                continue;
            }
            if !march_is_stable {
                let (p, d) = phase.eval_jet(dy);
                if (p * p + d * d + b.v0(y) - lambda).abs() > cfg.eik_tol {
                    folds.push(y);
                    break;
                }
                samples.push((y, p, d));
                continue;
            }
            if state.is_none() {
                let y_start = y_c + dir * cfg.jet_handoff;
                let (p, d) = phase.eval_jet(dir * cfg.jet_handoff);
                state = Some((y_start, p, d));
            }
            let (ys, ps, ds) = state.unwrap();
            match march(b, ys, ps, ds, y, cfg) {
                Ok((p, d)) => {
                    samples.push((y, p, d));
                    state = Some((y, p, d));
                }
                Err(March::Fold(y_fold)) => {
                    folds.push(y_fold);
                    break;
                }
            }
        }
    }
    // the node nearest y_c may coincide with it; ensure it is present
    if !samples.iter().any(|s| (s.0 - y_c).abs() < 0.5 * h) {
        let (p, d) = phase.eval_jet(0.0);
        samples.push((y_c, p, d));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.curve = samples;
    out.folds = folds;
    Ok(out)
}

enum March {
    Fold(f64),
}

/// Adaptive RK4 in y from (ys, ps, ds) to y_end on the graph ODE.
fn march(
    b: &BoundaryData,
    ys: f64,
    ps: f64,
    ds: f64,
    y_end: f64,
    cfg: &Config,
) -> std::result::Result<(f64, f64), March> {
    let f = |y: f64, s: [f64; 2]| -> Option<[f64; 2]> {
        let mu = s[1];
        if (2.0 * mu).abs() < cfg.fold_tol {
            return None;
        }
        Some([mu, -(b.v0_d(y, 1) + 2.0 * s[0] * mu) / (2.0 * mu)])
    };
    let dir = (y_end - ys).signum();
    let mut y = ys;
    let mut s = [ps, ds];
    let mut h = (y_end - ys).abs().min(1e-3).max(1e-9) * dir;
    let step_tol = cfg.eik_tol * 1e-3;
    let rk4 = |y: f64, s: [f64; 2], h: f64| -> Option<[f64; 2]> {
        let k1 = f(y, s)?;
        let k2 = f(y + 0.5 * h, [s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]])?;
        let k3 = f(y + 0.5 * h, [s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]])?;
        let k4 = f(y + h, [s[0] + h * k3[0], s[1] + h * k3[1]])?;
        Some([
            s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    };
    let mut steps = 0usize;
    while (y_end - y) * dir > 1e-14 {
        steps += 1;
        if steps > 2_000_000 {
            // the only way to stall is the singularity at mu = 0
            return Err(March::Fold(y));
        }
        if h.abs() > (y_end - y).abs() {
            h = y_end - y;
        }
        let attempt = (|| {
            let full = rk4(y, s, h)?;
            let half = rk4(y, s, 0.5 * h)?;
            let half2 = rk4(y + 0.5 * h, half, 0.5 * h)?;
            Some((full, half2))
        })();
        let (full, half2) = match attempt {
            Some(v) => v,
            None => return Err(March::Fold(y)),
        };
        let err = (full[0] - half2[0]).abs().max((full[1] - half2[1]).abs()) / 15.0;
        if err > step_tol {
            if h.abs() > 1e-12 {
                h *= 0.5;
                continue;
            }
            // the step size has collapsed: the ODE is singular here, which
            // for this equation means mu -> 0, i.e. a fold
            return Err(March::Fold(y));
        }
        s = [
            half2[0] + (half2[0] - full[0]) / 15.0,
            half2[1] + (half2[1] - full[1]) / 15.0,
        ];
        y += h;
        if (2.0 * s[1]).abs() < cfg.fold_tol {
            return Err(March::Fold(y));
        }
        let grow = if err > 0.0 {
            0.9 * (step_tol / err).powf(0.2)
        } else {
            5.0
        };
        h *= grow.clamp(0.2, 5.0);
    }
    Ok((s[0], s[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{radial_points, Direction};
    use crate::linalg::fornberg_weights;
    use std::f64::consts::TAU;

    fn cfg() -> Config {
        Config::default()
    }

    fn cos_y() -> BoundaryData {
        BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap()
    }

    fn saddle5() -> RadialPoint {
        radial_points(&cos_y(), 5.0, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::Saddle)
            .unwrap()
    }

    fn sink5() -> RadialPoint {
        radial_points(&cos_y(), 5.0, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::SinkOrSource)
            .unwrap()
    }

    #[test]
    fn jet_leading_coefficients() {
        let q = saddle5();
        let b = cos_y();
        for branch in [1, 2] {
            let ph = phase_jet(&q, branch, 8, &b, &cfg()).unwrap();
            assert!((ph.jet[0] - 2.0).abs() < 1e-12, "c0 = nu_t");
            assert_eq!(ph.jet[1], 0.0, "c1 = 0");
            let r = if branch == 1 { q.r1.re } else { q.r2.re };
            assert!((2.0 * ph.jet[2] + q.nu_t * r).abs() < 1e-12, "c2 = -nu r/2");
        }
        // branch 2 second derivative: Phi'' = -nu r2 = -2 * 1.11237 = -2.22474
        let ph2 = phase_jet(&q, 2, 8, &b, &cfg()).unwrap();
        assert!((2.0 * ph2.jet[2] + 2.0 * 1.1123724356957945).abs() < 1e-10);
    }

    #[test]
    fn even_potential_kills_odd_coefficients() {
        let b = cos_y();
        for q in [saddle5(), sink5()] {
            let ph = phase_jet(&q, 1, 10, &b, &cfg()).unwrap();
            for m in (3..=10).step_by(2) {
                assert!(
                    ph.jet[m].abs() < 1e-12,
                    "odd coefficient c{m} = {}",
                    ph.jet[m]
                );
            }
        }
    }

    #[test]
    fn centers_are_rejected() {
        let b = cos_y();
        let q = radial_points(&b, 0.5, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing)
            .unwrap();
        assert!(matches!(
            phase_jet(&q, 1, 8, &b, &cfg()),
            Err(Error::NotCenter)
        ));
    }

    #[test]
    fn continued_curve_satisfies_eikonal() {
        let b = cos_y();
        let q = saddle5();
        for branch in [1, 2] {
            let ph = phase_jet(&q, branch, 12, &b, &cfg()).unwrap();
            let ph = continue_phase(&ph, &b, -0.5, 0.5, 512, &cfg()).unwrap();
            assert!(ph.folds.is_empty());
            assert_eq!(ph.curve.len(), 512);
            let res = ph.max_residual(&b);
            assert!(res <= 1e-10, "branch {branch} residual {res:.3e}");
        }
        // sink branch 1 comes from the jet (the march is ill-posed there);
        // full coverage of the window certifies the jet converged on it
        let q = sink5();
        let yc = q.crit.y_c;
        let ph = phase_jet(&q, 1, 40, &b, &cfg()).unwrap();
        let ph = continue_phase(&ph, &b, yc - 0.5, yc + 0.5, 512, &cfg()).unwrap();
        assert!(ph.folds.is_empty(), "jet must hold eik_tol over the window");
        assert_eq!(ph.curve.len(), 512);
        // sink branch 2 marches stably (off-branch growth exponent r1/r2 < 1)
        let ph2 = phase_jet(&q, 2, 12, &b, &cfg()).unwrap();
        let ph2 = continue_phase(&ph2, &b, yc - 0.5, yc + 0.5, 512, &cfg()).unwrap();
        assert!(ph2.folds.is_empty());
        let res = ph2.max_residual(&b);
        assert!(res <= 1e-10, "sink branch 2 residual {res:.3e}");
    }

    #[test]
    fn outgoing_branch_keeps_nu_above_nu_t() {
        let b = cos_y();
        let q = saddle5();
        // branch 1 (r1 < 0): Phi'' > 0, nu = Phi >= nu_t; branch 2 the opposite
        let ph1 = continue_phase(
            &phase_jet(&q, 1, 12, &b, &cfg()).unwrap(),
            &b,
            -0.5,
            0.5,
            256,
            &cfg(),
        )
        .unwrap();
        for &(_, p, _) in &ph1.curve {
            assert!(p >= q.nu_t - 1e-12);
        }
        let ph2 = continue_phase(
            &phase_jet(&q, 2, 12, &b, &cfg()).unwrap(),
            &b,
            -0.5,
            0.5,
            256,
            &cfg(),
        )
        .unwrap();
        for &(_, p, _) in &ph2.curve {
            assert!(p <= q.nu_t + 1e-12);
        }
    }

    #[test]
    fn jet_matches_ode_continuation_by_finite_differences() {
        // saddle branches march stably away from the radial point, so the
        // ODE-continued curve is an independent check on the jet there
        let b = cos_y();
        let q = saddle5();
        for branch in [1, 2] {
            let ph = phase_jet(&q, branch, 12, &b, &cfg()).unwrap();
            let ph =
                continue_phase(&ph, &b, q.crit.y_c - 0.6, q.crit.y_c + 0.6, 2048, &cfg()).unwrap();
            // 9-point stencils at spacing 0.05, all nodes outside the jet
            // handoff except the center
            let h = 0.05;
            let nodes: Vec<f64> = (-4..=4).map(|i| i as f64 * h).collect();
            let c = cfg();
            let vals: Vec<f64> = nodes
                .iter()
                .map(|&dy| ph.eval(q.crit.y_c + dy, &c).unwrap().0)
                .collect();
            let mut fact = 1.0;
            for order in 1..=4usize {
                fact *= order as f64;
                let w = fornberg_weights(0.0, &nodes, order);
                let d: f64 = w.iter().zip(&vals).map(|(wi, v)| wi * v).sum();
                let coeff = d / fact;
                assert!(
                    (coeff - ph.jet[order]).abs() < 1e-6,
                    "branch {branch} order {order}: FD {coeff} vs jet {}",
                    ph.jet[order]
                );
            }
        }
    }

    #[test]
    fn resonant_sink_jet_is_obstructed() {
        // a = 1/2, nu^2 = 8/3 => r1 = 1/4 exactly: obstruction at order 4.
        // For the pure cosine the order-4 defect cancels identically
        // (c2^2 = nu^2/64 = 1/24 = -v4), so the resonance is solvable there.
        let b = cos_y();
        let lambda = -1.0 + 8.0 / 3.0;
        let q = radial_points(&b, lambda, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::SinkOrSource)
            .unwrap();
        assert!((q.r1.re - 0.25).abs() < 1e-12);
        assert!(q.resonant, "r2/r1 = 3 must be flagged");
        match phase_jet(&q, 1, 8, &b, &cfg()) {
            Err(Error::ResonantObstruction { order, .. }) => assert_eq!(order, 4),
            other => panic!("expected obstruction, got {other:?}"),
        }
        let ph = phase_jet_truncated(&q, 1, 8, &b, &cfg()).unwrap();
        let o = ph.obstruction.unwrap();
        assert_eq!(o.order, 4);
        assert!(o.defect.abs() < 1e-12, "pure-cosine defect cancels exactly");
        assert_eq!(ph.jet.len(), 4); // coefficients 0..=3 only
        // branch 2 is unobstructed at this energy
        assert!(phase_jet(&q, 2, 8, &b, &cfg()).is_ok());

        // a second mode breaks the cancellation: for cos y + eps cos 2y at
        // the energy with nu^2 = 16a/3 (so r1 = 1/4 again) the order-4
        // defect is exactly eps/2
        let eps = 0.2;
        let b2 = BoundaryData::from_v0(vec![(1, 1.0, 0.0), (2, eps, 0.0)], TAU).unwrap();
        let min = crate::boundary::find_critical_points(&b2, &cfg())
            .unwrap()
            .into_iter()
            .find(|c| c.kind == crate::boundary::CritKind::Minimum)
            .unwrap();
        let lambda2 = min.value + 8.0 * min.hessian / 3.0;
        let q2 = radial_points(&b2, lambda2, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::SinkOrSource)
            .unwrap();
        assert!((q2.r1.re - 0.25).abs() < 1e-12);
        let ph2 = phase_jet_truncated(&q2, 1, 8, &b2, &cfg()).unwrap();
        let o2 = ph2.obstruction.unwrap();
        assert_eq!(o2.order, 4);
        assert!(
            (o2.defect - 0.5 * eps).abs() < 1e-10,
            "defect must be eps/2 = {}, got {}",
            0.5 * eps,
            o2.defect
        );
    }

    #[test]
    fn incoming_branch_folds_at_classical_turning_points() {
        // double well cos y + cos(2y)/2: maxima at 0 (V = 3/2) and pi
        // (V = -1/2), minima at +-2pi/3 (V = -3/4). At lambda = 0.4 the
        // barrier at y = 0 is classically forbidden, so the incoming curve
        // from the saddle over pi turns where Phi^2 + V0 returns to lambda,
        // symmetrically on both sides.
        use std::f64::consts::PI;
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0), (2, 0.5, 0.0)], TAU).unwrap();
        let q = radial_points(&b, 0.4, &cfg())
            .unwrap()
            .into_iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::Saddle)
            .unwrap();
        assert!((q.crit.y_c - PI).abs() < 1e-9);
        let ph = phase_jet(&q, 2, 12, &b, &cfg()).unwrap();
        let ph = continue_phase(&ph, &b, PI - 2.5, PI + 2.5, 1024, &cfg()).unwrap();
        assert_eq!(ph.folds.len(), 2, "a turning point on each side");
        for &yf in &ph.folds {
            let d = (yf - PI).abs();
            assert!(d > 1.0 && d < 2.2, "fold at {yf}");
        }
        // retained samples still satisfy the eikonal equation, and the curve
        // is strictly shorter than the requested window
        assert!(ph.max_residual(&b) <= 1e-9);
        let y_min = ph.curve.iter().map(|s| s.0).fold(f64::MAX, f64::min);
        let y_max = ph.curve.iter().map(|s| s.0).fold(f64::MIN, f64::max);
        assert!(y_max < PI + 2.5 - 1e-9 && y_min > PI - 2.5 + 1e-9);
    }
}
