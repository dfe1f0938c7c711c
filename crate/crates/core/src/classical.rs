//! Contact dynamics at the boundary: the characteristic variety Sigma(lambda),
//! the flow field W, radial points with their linearization exponents r1, r2,
//! bicharacteristic integration, and the Morse decomposition DAG of outgoing
//! radial points under the flow-out partial order.

use num_complex::Complex64;

use crate::boundary::{BoundaryData, CritKind, CriticalPoint};
use crate::config::Config;
use crate::error::{Error, Result};

/// Point of the reduced boundary phase space: y on the circle, nu dual to 1/x,
/// mu dual to y (h0-normalized frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub y: f64,
    pub nu: f64,
    pub mu: f64,
}

impl PhasePoint {
    pub fn energy(&self, b: &BoundaryData) -> f64 {
        self.nu * self.nu + self.mu * self.mu + b.v0(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Outgoing => 1.0,
            Direction::Incoming => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    Center,
    DegenerateCenter,
    SinkOrSource,
    Saddle,
}

impl std::fmt::Display for RadialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RadialKind::Center => "center",
            RadialKind::DegenerateCenter => "degenerate-center",
            RadialKind::SinkOrSource => "sink-or-source",
            RadialKind::Saddle => "saddle",
        };
        f.write_str(s)
    }
}

/// A zero of W over a critical point of V0, fully classified.
///
/// The linearization of W in (dy, dmu) at the point is A = [[0,2],[-2a,-2nu_t]]
/// with a = V0''/2; its eigenvalues are s_j = -2 nu_t r_j where the r_j solve
/// r^2 - r + a/nu_t^2 = 0, so r1 + r2 = 1 and r1 r2 = a/nu_t^2 exactly.
#[derive(Debug, Clone, Copy)]
pub struct RadialPoint {
    pub crit: CriticalPoint,
    pub sign: Direction,
    /// Signed nu value at the point: +/- sqrt(lambda - V0(y_c)).
    pub nu_t: f64,
    pub lambda: f64,
    pub r1: Complex64,
    pub r2: Complex64,
    pub kind: RadialKind,
    /// True iff kind is SinkOrSource and r2/r1 is a positive integer
    /// (to resonance_tol, relative).
    pub resonant: bool,
    /// Within resonance_warn of a resonance: series coefficients are unreliable.
    pub near_resonant: bool,
    /// Eigencovectors of the linearization: nu_t (1 - r_j) dy + dmu, stored as
    /// (dy coefficient, dmu coefficient); the covector for s_j annihilates the
    /// eigenvector of the other eigenvalue.
    pub eigvecs: [[Complex64; 2]; 2],
}

impl RadialPoint {
    pub fn phase_point(&self) -> PhasePoint {
        PhasePoint {
            y: self.crit.y_c,
            nu: self.nu_t,
            mu: 0.0,
        }
    }

    /// nu(q), the ordering functional of the Morse decomposition.
    pub fn nu(&self) -> f64 {
        self.nu_t
    }

    /// Eigenvectors (tangents) of the linearization: t_j = (1, -nu_t r_j).
    pub fn eigen_tangent(&self, j: usize) -> [Complex64; 2] {
        let r = if j == 0 { self.r1 } else { self.r2 };
        [Complex64::new(1.0, 0.0), -self.nu_t * r]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajStatus {
    Converged,
    LeftDomain,
    MaxTime,
}

/// An integrated bicharacteristic with its limit radial points when captured.
#[derive(Debug, Clone)]
pub struct Bicharacteristic {
    /// Time-ordered (t, point) samples, t increasing.
    pub samples: Vec<(f64, PhasePoint)>,
    /// Backward-time limit, when the run captured one.
    pub alpha_limit: Option<RadialPoint>,
    /// Forward-time limit, when the run captured one.
    pub omega_limit: Option<RadialPoint>,
    pub status: TrajStatus,
    /// Largest |energy - lambda| seen along the trajectory.
    pub max_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDir {
    Forward,
    Backward,
}

/// DAG of outgoing radial points under the flow-out order, with the
/// nu-descending filtration whose prefixes are the closed sets Gamma_i.
#[derive(Debug, Clone)]
pub struct MorseDiagram {
    pub nodes: Vec<RadialPoint>,
    /// (source index, target index); flow leaves source and captures at target.
    pub edges: Vec<(usize, usize)>,
    /// a(lambda) = min nu over the outgoing radial points.
    pub a_min: f64,
    /// Node indices in nu-descending order; Gamma_i = filtration[..i].
    pub filtration: Vec<usize>,
    /// Sources whose flow-out exhausted max_time without capture (edge omitted).
    pub unresolved: Vec<usize>,
}

/// The boundary flow field in the h0-normalized frame:
/// W(y, nu, mu) = (2 mu, 2 mu^2, -(V0'(y) + 2 nu mu)).
/// dnu/dt = 2 mu^2 >= 0: nu is non-decreasing along every integral curve.
pub fn vector_field(p: &PhasePoint, b: &BoundaryData) -> [f64; 3] {
    [
        2.0 * p.mu,
        2.0 * p.mu * p.mu,
        -(b.v0_d(p.y, 1) + 2.0 * p.nu * p.mu),
    ]
}

/// Both radial points (outgoing and incoming) over every critical point with
/// V0(y_c) < lambda, classified per the r1, r2 structure.
pub fn radial_points(b: &BoundaryData, lambda: f64, cfg: &Config) -> Result<Vec<RadialPoint>> {
    let crits = crate::boundary::find_critical_points(b, cfg)?;
    for c in &crits {
        if (lambda - c.value).abs() < cfg.cv_tol {
            return Err(Error::CriticalEnergy {
                lambda,
                cv: c.value,
                tol: cfg.cv_tol,
            });
        }
    }
    let mut out = Vec::new();
    for c in &crits {
        if c.value > lambda {
            continue;
        }
        let nu_abs = (lambda - c.value).sqrt();
        for sign in [Direction::Outgoing, Direction::Incoming] {
            out.push(classify(*c, sign, nu_abs, lambda, cfg));
        }
    }
    Ok(out)
}

fn classify(
    crit: CriticalPoint,
    sign: Direction,
    nu_abs: f64,
    lambda: f64,
    cfg: &Config,
) -> RadialPoint {
    let nu_t = sign.sign() * nu_abs;
    let a = crit.hessian / 2.0;
    // r^2 - r + a/nu_t^2 = 0; disc = 1 - 4a/nu_t^2
    let disc = 1.0 - 4.0 * a / (nu_t * nu_t);
    let (r1, r2, kind) = match crit.kind {
        CritKind::Maximum => {
            // a < 0 so disc > 1: real roots straddling [0, 1]
            let s = disc.sqrt();
            (
                Complex64::new(0.5 * (1.0 - s), 0.0),
                Complex64::new(0.5 * (1.0 + s), 0.0),
                RadialKind::Saddle,
            )
        }
        CritKind::Minimum => {
            let lambda_hess = crit.value + 2.0 * crit.hessian;
            if (lambda - lambda_hess).abs() < cfg.cv_tol {
                (
                    Complex64::new(0.5, 0.0),
                    Complex64::new(0.5, 0.0),
                    RadialKind::DegenerateCenter,
                )
            } else if lambda < lambda_hess {
                let w = 0.5 * (-disc).sqrt();
                (
                    Complex64::new(0.5, -w),
                    Complex64::new(0.5, w),
                    RadialKind::Center,
                )
            } else {
                let s = disc.sqrt();
                (
                    Complex64::new(0.5 * (1.0 - s), 0.0),
                    Complex64::new(0.5 * (1.0 + s), 0.0),
                    RadialKind::SinkOrSource,
                )
            }
        }
    };
    let (resonant, near_resonant) = if kind == RadialKind::SinkOrSource {
        let ratio = r2.re / r1.re;
        let nearest = ratio.round();
        let rel = (ratio - nearest).abs() / ratio.abs();
        (
            nearest >= 1.0 && rel < cfg.resonance_tol,
            nearest >= 1.0 && rel < cfg.resonance_warn,
        )
    } else {
        (false, false)
    };
    let cov = |r: Complex64| [Complex64::new(nu_t, 0.0) * (1.0 - r), Complex64::new(1.0, 0.0)];
    RadialPoint {
        crit,
        sign,
        nu_t,
        lambda,
        r1,
        r2,
        kind,
        resonant,
        near_resonant,
        eigvecs: [cov(r1), cov(r2)],
    }
}

fn circle_dist(a: f64, b: f64, ell: f64) -> f64 {
    let d = (a - b).rem_euclid(ell);
    d.min(ell - d)
}

fn capture_dist(p: &PhasePoint, q: &RadialPoint, ell: f64) -> f64 {
    let dy = circle_dist(p.y, q.crit.y_c, ell);
    let dn = p.nu - q.nu_t;
    let dm = p.mu;
    (dy * dy + dn * dn + dm * dm).sqrt()
}

fn rk4_step(u: [f64; 3], h: f64, s: f64, b: &BoundaryData) -> [f64; 3] {
    let f = |u: [f64; 3]| {
        let p = PhasePoint {
            y: u[0],
            nu: u[1],
            mu: u[2],
        };
        let w = vector_field(&p, b);
        [s * w[0], s * w[1], s * w[2]]
    };
    let k1 = f(u);
    let add = |u: [f64; 3], k: [f64; 3], c: f64| [u[0] + c * k[0], u[1] + c * k[1], u[2] + c * k[2]];
    let k2 = f(add(u, k1, 0.5 * h));
    let k3 = f(add(u, k2, 0.5 * h));
    let k4 = f(add(u, k3, h));
    [
        u[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        u[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        u[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Adaptive RK4 (step doubling, fifth-order local extrapolation) of the flow
/// from `start`, stopping on capture within capture_radius of a radial point
/// or at max_time. Energy conservation is monitored, never enforced.
pub fn integrate(
    start: &PhasePoint,
    b: &BoundaryData,
    lambda: f64,
    dir: FlowDir,
    cfg: &Config,
) -> Result<Bicharacteristic> {
    let rps = radial_points(b, lambda, cfg).unwrap_or_default();
    integrate_with_targets(start, b, lambda, dir, cfg, &rps)
}

/// Same as `integrate` but with the capture targets supplied by the caller
/// (the Morse diagram builder reuses one radial-point list for many seeds).
pub fn integrate_with_targets(
    start: &PhasePoint,
    b: &BoundaryData,
    lambda: f64,
    dir: FlowDir,
    cfg: &Config,
    targets: &[RadialPoint],
) -> Result<Bicharacteristic> {
    let ell = b.circumference;
    let drift0 = (start.energy(b) - lambda).abs();
    if drift0 > cfg.energy_tol {
        return Err(Error::Invalid(format!(
            "start is off Sigma(lambda): |energy - lambda| = {drift0:.3e}"
        )));
    }
    let s = match dir {
        FlowDir::Forward => 1.0,
        FlowDir::Backward => -1.0,
    };

    let capture = |p: &PhasePoint| -> Option<usize> {
        targets
            .iter()
            .enumerate()
            .filter(|(_, q)| capture_dist(p, q, ell) < cfg.capture_radius)
            .map(|(i, q)| (i, capture_dist(p, q, ell)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(i, _)| i)
    };

    let mut samples = vec![(0.0, *start)];
    let mut max_drift = drift0;
    let mut limit = capture(start);
    let mut status = if limit.is_some() {
        TrajStatus::Converged
    } else {
        TrajStatus::MaxTime
    };

    if limit.is_none() {
        let mut u = [start.y, start.nu, start.mu];
        let mut t = 0.0;
        let mut h: f64 = 1e-3;
        let step_tol = cfg.energy_tol * 1e-4;
        while t < cfg.max_time {
            h = h.min(cfg.max_time - t).max(1e-12);
            let full = rk4_step(u, h, s, b);
            let half = rk4_step(rk4_step(u, 0.5 * h, s, b), 0.5 * h, s, b);
            let err = (0..3).map(|i| (full[i] - half[i]).abs()).fold(0.0, f64::max) / 15.0;
            let scale = 1.0 + u.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if err > step_tol * scale && h > 1e-10 {
                h *= 0.5;
                continue;
            }
            // local extrapolation: half-step result is 4th order, correct to 5th
            u = [
                half[0] + (half[0] - full[0]) / 15.0,
                half[1] + (half[1] - full[1]) / 15.0,
                half[2] + (half[2] - full[2]) / 15.0,
            ];
            t += h;
            let p = PhasePoint {
                y: u[0],
                nu: u[1],
                mu: u[2],
            };
            let drift = (p.energy(b) - lambda).abs();
            max_drift = max_drift.max(drift);
            if drift > 10.0 * cfg.energy_tol {
                return Err(Error::EnergyDrift {
                    drift,
                    tol: cfg.energy_tol,
                });
            }
            samples.push((s * t, p));
            if let Some(i) = capture(&p) {
                limit = Some(i);
                status = TrajStatus::Converged;
                break;
            }
            let grow = if err > 0.0 {
                0.9 * (step_tol * scale / err).powf(0.2)
            } else {
                5.0
            };
            h *= grow.clamp(0.2, 5.0);
        }
    }

    if s < 0.0 {
        samples.reverse();
    }
    let captured = limit.map(|i| targets[i]);
    let (alpha_limit, omega_limit) = match dir {
        FlowDir::Forward => (None, captured),
        FlowDir::Backward => (captured, None),
    };
    // starting on a radial point: the constant trajectory has both limits
    let (alpha_limit, omega_limit) = if samples.len() == 1 && captured.is_some() {
        (captured, captured)
    } else {
        (alpha_limit, omega_limit)
    };
    Ok(Bicharacteristic {
        samples,
        alpha_limit,
        omega_limit,
        status,
        max_drift,
    })
}

/// Seed points for the flow-out of a hyperbolic radial point, offset by
/// seed_eps and projected back onto Sigma(lambda) exactly.
///
/// Saddle: two seeds along the unstable eigendirection, the eigenvalue
/// -2 nu_t r_j with positive real part. Sink/source: a ring of n_seed
/// directions (used when the point repels, i.e. under the reversed flow).
pub fn unstable_directions(
    q: &RadialPoint,
    b: &BoundaryData,
    cfg: &Config,
) -> Result<Vec<PhasePoint>> {
    match q.kind {
        RadialKind::Center | RadialKind::DegenerateCenter => {
            return Err(Error::WrongKind(q.kind.to_string()))
        }
        _ => {}
    }
    let project = |y: f64, mu: f64| -> PhasePoint {
        let rad = q.lambda - mu * mu - b.v0(y);
        debug_assert!(rad > 0.0, "seed left the classically allowed region");
        PhasePoint {
            y,
            nu: q.nu_t.signum() * rad.sqrt(),
            mu,
        }
    };
    match q.kind {
        RadialKind::Saddle => {
            let t = saddle_unstable_tangent(q)?;
            let seeds = [1.0, -1.0]
                .iter()
                .map(|&sgn| {
                    project(
                        q.crit.y_c + sgn * cfg.seed_eps * t[0],
                        sgn * cfg.seed_eps * t[1],
                    )
                })
                .collect();
            Ok(seeds)
        }
        RadialKind::SinkOrSource => {
            let seeds = (0..cfg.n_seed)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / cfg.n_seed as f64;
                    project(
                        q.crit.y_c + cfg.seed_eps * th.cos(),
                        cfg.seed_eps * th.sin(),
                    )
                })
                .collect();
            Ok(seeds)
        }
        _ => unreachable!(),
    }
}

/// Unit tangent (dy, dmu) of the saddle's unstable eigendirection: the
/// eigenvector t_j = (1, -nu_t r_j) whose eigenvalue s_j = -2 nu_t r_j has
/// positive real part. It is annihilated by the eigencovector of the other
/// eigenvalue, nu_t (1 - r_{3-j}) dy + dmu.
pub fn saddle_unstable_tangent(q: &RadialPoint) -> Result<[f64; 2]> {
    if q.kind != RadialKind::Saddle {
        return Err(Error::WrongKind(q.kind.to_string()));
    }
    let (s1, s2) = (-2.0 * q.nu_t * q.r1.re, -2.0 * q.nu_t * q.r2.re);
    let r = if s1 > s2 { q.r1.re } else { q.r2.re };
    debug_assert!(s1.max(s2) > 0.0);
    let t = [1.0, -q.nu_t * r];
    let n = (t[0] * t[0] + t[1] * t[1]).sqrt();
    Ok([t[0] / n, t[1] / n])
}

/// Morse decomposition of RP+(lambda): integrate the flow-out of every saddle
/// until capture; order nodes by descending nu for the filtration.
pub fn morse_diagram(b: &BoundaryData, lambda: f64, cfg: &Config) -> Result<MorseDiagram> {
    let all = radial_points(b, lambda, cfg)?;
    let nodes: Vec<RadialPoint> = all
        .iter()
        .filter(|q| q.sign == Direction::Outgoing)
        .copied()
        .collect();

    let mut edges = Vec::new();
    let mut unresolved = Vec::new();
    for (i, q) in nodes.iter().enumerate() {
        if q.kind != RadialKind::Saddle {
            continue;
        }
        // the seed sits seed_eps from its own saddle, inside capture_radius;
        // exclude the source so the trajectory can leave before capture
        let targets: Vec<RadialPoint> = nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| *q)
            .collect();
        for seed in unstable_directions(q, b, cfg)? {
            let traj =
                integrate_with_targets(&seed, b, lambda, FlowDir::Forward, cfg, &targets)?;
            match traj.omega_limit {
                Some(target) => {
                    let j = nodes
                        .iter()
                        .position(|n| {
                            n.crit.y_c == target.crit.y_c && n.sign == target.sign
                        })
                        .expect("capture target is a node");
                    if j != i {
                        edges.push((i, j));
                    }
                }
                None => unresolved.push(i),
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    unresolved.sort_unstable();
    unresolved.dedup();

    let a_min = nodes
        .iter()
        .map(|q| q.nu_t)
        .fold(f64::INFINITY, f64::min);

    let mut filtration: Vec<usize> = (0..nodes.len()).collect();
    filtration.sort_by(|&i, &j| {
        nodes[j]
            .nu_t
            .partial_cmp(&nodes[i].nu_t)
            .unwrap()
            .then(nodes[i].crit.y_c.partial_cmp(&nodes[j].crit.y_c).unwrap())
    });

    Ok(MorseDiagram {
        nodes,
        edges,
        a_min,
        filtration,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn cfg() -> Config {
        Config::default()
    }

    fn cos_y() -> BoundaryData {
        BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap()
    }

    const ALG_TOL: f64 = 1e-12;

    #[test]
    fn field_vanishes_at_radial_point_and_matches_substitution() {
        let b = cos_y();
        let p = PhasePoint {
            y: PI,
            nu: 1.5f64.sqrt(),
            mu: 0.0,
        };
        // zero up to sin(pi) rounding
        for c in vector_field(&p, &b) {
            assert!(c.abs() <= 2e-16);
        }
        let p = PhasePoint {
            y: 0.0,
            nu: 0.0,
            mu: 1.0,
        };
        assert_eq!(vector_field(&p, &b), [2.0, 2.0, 0.0]);
    }

    #[test]
    fn nu_derivative_is_nonnegative_everywhere() {
        let b = cos_y();
        for i in 0..500 {
            let p = PhasePoint {
                y: TAU * (i as f64 * 0.617).fract(),
                nu: 3.0 * ((i as f64 * 0.133).fract() - 0.5),
                mu: 3.0 * ((i as f64 * 0.377).fract() - 0.5),
            };
            assert!(vector_field(&p, &b)[1] >= 0.0);
        }
    }

    #[test]
    fn center_classification_at_low_energy() {
        let rps = radial_points(&cos_y(), 0.5, &cfg()).unwrap();
        assert_eq!(rps.len(), 2); // only the minimum is below lambda
        let q = rps.iter().find(|q| q.sign == Direction::Outgoing).unwrap();
        assert_eq!(q.kind, RadialKind::Center);
        assert!((q.nu_t - 1.5f64.sqrt()).abs() < ALG_TOL);
        let w = (1.0f64 / 12.0).sqrt();
        assert!((q.r1 - Complex64::new(0.5, -w)).norm() < ALG_TOL);
        assert!((q.r2 - Complex64::new(0.5, w)).norm() < ALG_TOL);
    }

    #[test]
    fn sink_and_saddle_at_high_energy() {
        let rps = radial_points(&cos_y(), 5.0, &cfg()).unwrap();
        assert_eq!(rps.len(), 4);
        let sink = rps
            .iter()
            .find(|q| q.sign == Direction::Outgoing && q.crit.kind == CritKind::Minimum)
            .unwrap();
        assert_eq!(sink.kind, RadialKind::SinkOrSource);
        let r1 = 0.5 * (1.0 - (2.0f64 / 3.0).sqrt());
        assert!((sink.r1.re - r1).abs() < ALG_TOL);
        assert!((sink.r2.re - (1.0 - r1)).abs() < ALG_TOL);
        let saddle = rps
            .iter()
            .find(|q| q.sign == Direction::Outgoing && q.crit.kind == CritKind::Maximum)
            .unwrap();
        assert_eq!(saddle.kind, RadialKind::Saddle);
        assert!((saddle.r1.re - 0.5 * (1.0 - 1.5f64.sqrt())).abs() < ALG_TOL);
        assert!(saddle.r1.re < 0.0 && saddle.r2.re > 1.0);
    }

    /// Independent check of the exponents: eigen-decompose the linearization
    /// A = [[0, 2], [-2a, -2 nu]] directly and compare r_j = -s_j / (2 nu).
    #[test]
    fn exponents_match_linearization_eigenvalues() {
        for lambda in [5.0, 3.3, 9.7] {
            for q in radial_points(&cos_y(), lambda, &cfg()).unwrap() {
                let a = q.crit.hessian / 2.0;
                let (tr, det) = (-2.0 * q.nu_t, 4.0 * a);
                let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
                let s1 = (Complex64::new(tr, 0.0) - disc) / 2.0;
                let s2 = (Complex64::new(tr, 0.0) + disc) / 2.0;
                let mut rs = [s1 / (-2.0 * q.nu_t), s2 / (-2.0 * q.nu_t)];
                rs.sort_by(|p, q| p.re.partial_cmp(&q.re).unwrap());
                assert!((q.r1 - rs[0]).norm() < 1e-11 || (q.r1 - rs[1]).norm() < 1e-11);
                assert!((q.r1 + q.r2 - 1.0).norm() < ALG_TOL);
                assert!((q.r1 * q.r2 - a / (q.nu_t * q.nu_t)).norm() < ALG_TOL);
            }
        }
    }

    #[test]
    fn no_radial_points_below_the_potential_floor() {
        assert!(radial_points(&cos_y(), -2.0, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn critical_energy_is_rejected() {
        assert!(matches!(
            radial_points(&cos_y(), 1.0, &cfg()),
            Err(Error::CriticalEnergy { .. })
        ));
    }

    #[test]
    fn classification_sweeps_through_hessian_threshold() {
        // circumference 4 pi: lambda_Hess = -1/2, away from Cv = {-1, 1}
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0)], 2.0 * TAU).unwrap();
        let kind_at = |lam: f64| {
            radial_points(&b, lam, &cfg())
                .unwrap()
                .into_iter()
                .find(|q| q.sign == Direction::Outgoing)
                .unwrap()
                .kind
        };
        assert_eq!(kind_at(-0.5 - 1e-3), RadialKind::Center);
        assert_eq!(kind_at(-0.5 + 1e-9), RadialKind::DegenerateCenter);
        assert_eq!(kind_at(-0.5 + 1e-3), RadialKind::SinkOrSource);
    }

    #[test]
    fn trajectory_from_radial_point_is_constant() {
        let rps = radial_points(&cos_y(), 5.0, &cfg()).unwrap();
        let q = &rps[0];
        let traj = integrate(&q.phase_point(), &cos_y(), 5.0, FlowDir::Forward, &cfg()).unwrap();
        assert_eq!(traj.status, TrajStatus::Converged);
        assert_eq!(traj.samples.len(), 1);
        assert!(traj.alpha_limit.is_some() && traj.omega_limit.is_some());
    }

    #[test]
    fn forward_limit_outgoing_backward_limit_incoming() {
        let b = cos_y();
        let y0 = 0.1;
        let start = PhasePoint {
            y: y0,
            nu: -(5.0 - b.v0(y0)).sqrt(),
            mu: 0.0,
        };
        let fwd = integrate(&start, &b, 5.0, FlowDir::Forward, &cfg()).unwrap();
        assert_eq!(fwd.status, TrajStatus::Converged);
        assert!(fwd.omega_limit.unwrap().nu_t > 0.0);
        let bwd = integrate(&start, &b, 5.0, FlowDir::Backward, &cfg()).unwrap();
        assert_eq!(bwd.status, TrajStatus::Converged);
        assert!(bwd.alpha_limit.unwrap().nu_t < 0.0);

        // nu non-decreasing in time on the forward run, drift within budget
        for w in fwd.samples.windows(2) {
            assert!(w[1].1.nu - w[0].1.nu >= -1e-8);
        }
        assert!(fwd.max_drift <= cfg().energy_tol);
    }

    #[test]
    fn unstable_directions_reject_centers() {
        let rps = radial_points(&cos_y(), 0.5, &cfg()).unwrap();
        let q = rps.iter().find(|q| q.sign == Direction::Outgoing).unwrap();
        assert!(matches!(
            unstable_directions(q, &cos_y(), &cfg()),
            Err(Error::WrongKind(_))
        ));
        let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0)], 2.0 * TAU).unwrap();
        let rps = radial_points(&b, -0.5, &cfg()).unwrap();
        let q = rps.iter().find(|q| q.sign == Direction::Outgoing).unwrap();
        assert_eq!(q.kind, RadialKind::DegenerateCenter);
        assert!(matches!(
            unstable_directions(q, &b, &cfg()),
            Err(Error::WrongKind(_))
        ));
    }

    #[test]
    fn saddle_unstable_tangent_is_annihilated_by_the_other_covector() {
        let rps = radial_points(&cos_y(), 5.0, &cfg()).unwrap();
        let q = rps
            .iter()
            .find(|q| q.sign == Direction::Outgoing && q.kind == RadialKind::Saddle)
            .unwrap();
        let t = saddle_unstable_tangent(q).unwrap();
        // unstable tangent is (1, -nu r1); covector nu (1 - r2) dy + dmu kills it
        let pair = q.nu_t * (1.0 - q.r2.re) * t[0] + t[1];
        assert!(pair.abs() < ALG_TOL, "covector pairing = {pair:.3e}");
        // and the companion covector does not
        let other = q.nu_t * (1.0 - q.r1.re) * t[0] + t[1];
        assert!(other.abs() > 0.1);

        // oracle: flow the linearized dynamics forward (normalized Euler);
        // the direction settles on the eigenvector of largest Re(s), which is
        // the unstable one. Plain power iteration would find the stable
        // direction here since |s_stable| > |s_unstable| at this saddle.
        let a = q.crit.hessian / 2.0;
        let mat = [[0.0, 2.0], [-2.0 * a, -2.0 * q.nu_t]];
        let h = 0.05;
        let mut v = [0.6, 0.8];
        for _ in 0..2000 {
            let w = [
                v[0] + h * (mat[0][0] * v[0] + mat[0][1] * v[1]),
                v[1] + h * (mat[1][0] * v[0] + mat[1][1] * v[1]),
            ];
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            v = [w[0] / n, w[1] / n];
        }
        let cross = (v[0] * t[1] - v[1] * t[0]).abs();
        assert!(cross < 1e-9, "flow oracle disagrees: {cross:.3e}");
    }

    #[test]
    fn morse_diagram_single_node_between_thresholds() {
        let d = morse_diagram(&cos_y(), 0.5, &cfg()).unwrap();
        assert_eq!(d.nodes.len(), 1);
        assert!(d.edges.is_empty());
        assert!((d.a_min - 1.5f64.sqrt()).abs() < ALG_TOL);
    }

    #[test]
    fn morse_diagram_above_thresholds_has_saddle_to_sink_edge() {
        let d = morse_diagram(&cos_y(), 5.0, &cfg()).unwrap();
        assert_eq!(d.nodes.len(), 2);
        let saddle = d
            .nodes
            .iter()
            .position(|q| q.kind == RadialKind::Saddle)
            .unwrap();
        let sink = d
            .nodes
            .iter()
            .position(|q| q.kind == RadialKind::SinkOrSource)
            .unwrap();
        assert_eq!(d.edges, vec![(saddle, sink)]);
        assert!(d.nodes[sink].nu_t > d.nodes[saddle].nu_t);
        assert!((d.a_min - 2.0).abs() < ALG_TOL);
        // filtration: highest-nu node first, prefixes closed under flow-out
        assert_eq!(d.filtration, vec![sink, saddle]);
        assert!(d.unresolved.is_empty());
    }

    #[test]
    fn random_starts_converge_to_radial_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let b = cos_y();
        let lambda = 5.0;
        let c = cfg();
        let rps = radial_points(&b, lambda, &c).unwrap();
        let n = 300;
        let mut converged = 0;
        for _ in 0..n {
            let y: f64 = rng.gen::<f64>() * TAU;
            let e_kin = lambda - b.v0(y);
            let th: f64 = rng.gen::<f64>() * TAU;
            let mu = e_kin.sqrt() * th.sin();
            let nu = e_kin.sqrt() * th.cos();
            let start = PhasePoint { y, nu, mu };
            let traj =
                integrate_with_targets(&start, &b, lambda, FlowDir::Forward, &c, &rps).unwrap();
            if traj.status == TrajStatus::Converged {
                converged += 1;
            }
            for w in traj.samples.windows(2) {
                assert!(w[1].1.nu - w[0].1.nu >= -1e-8);
            }
        }
        assert!(
            converged as f64 >= 0.99 * n as f64,
            "{converged}/{n} converged"
        );
    }
}
