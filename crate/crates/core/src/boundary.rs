//! Boundary jet of the potential: V0 (the order-zero part restricted to the
//! boundary circle), V1 (the Coulomb-order correction dV/dx at x = 0), critical
//! points of V0 and the spectral thresholds they generate.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::fourier::FourierSeries;

/// Boundary data of the problem: finite Fourier series for V0 and V1 and the
/// circumference of the boundary circle (arclength for the flat metric h0).
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub v0_coeffs: FourierSeries,
    pub v1_coeffs: FourierSeries,
    pub circumference: f64,
}

impl BoundaryData {
    pub fn new(
        v0: Vec<(u32, f64, f64)>,
        v1: Vec<(u32, f64, f64)>,
        circumference: f64,
    ) -> Result<Self> {
        if !(circumference > 0.0) || !circumference.is_finite() {
            return Err(Error::Invalid(format!(
                "circumference must be positive and finite, got {circumference}"
            )));
        }
        Ok(BoundaryData {
            v0_coeffs: FourierSeries::new(v0, circumference),
            v1_coeffs: FourierSeries::new(v1, circumference),
            circumference,
        })
    }

    /// V0 with trailing V1 defaulted to zero.
    pub fn from_v0(v0: Vec<(u32, f64, f64)>, circumference: f64) -> Result<Self> {
        BoundaryData::new(v0, Vec::new(), circumference)
    }

    pub fn v0(&self, y: f64) -> f64 {
        self.v0_coeffs.eval(y)
    }

    pub fn v0_d(&self, y: f64, n: u32) -> f64 {
        self.v0_coeffs.derivative(y, n)
    }

    pub fn v1(&self, y: f64) -> f64 {
        self.v1_coeffs.eval(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CritKind {
    Minimum,
    Maximum,
}

/// A Morse critical point of V0 together with the data every later stage needs.
#[derive(Debug, Clone, Copy)]
pub struct CriticalPoint {
    /// Arclength position in [0, circumference).
    pub y_c: f64,
    pub kind: CritKind,
    /// V0(y_c).
    pub value: f64,
    /// V0''(y_c) with respect to arclength.
    pub hessian: f64,
    /// V1(y_c).
    pub v1: f64,
}

/// Threshold energy for one minimum: below it the two radial points over the
/// minimum have oscillatory (center) linearization, above it nodal (sink/source).
#[derive(Debug, Clone, Copy)]
pub struct HessianThreshold {
    pub y_min: f64,
    /// lambda_Hess = V0(y_min) + 2 V0''(y_min).
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct Thresholds {
    /// inf V0.
    pub kappa: f64,
    /// sup V0.
    pub k_sup: f64,
    /// Sorted distinct critical values of V0.
    pub cv: Vec<f64>,
    /// One Hessian threshold per minimum, ordered by y.
    pub hess: Vec<HessianThreshold>,
}

impl Thresholds {
    /// Human-readable placement of lambda among the thresholds (the four
    /// qualitative energy ranges), used by the CLI report.
    pub fn describe(&self, lambda: f64) -> String {
        let mut s = if lambda <= self.kappa {
            format!("lambda = {lambda} <= kappa = {}: no real radial points", self.kappa)
        } else if lambda > self.k_sup {
            format!(
                "lambda = {lambda} > K = {}: all critical points active (saddles over maxima)",
                self.k_sup
            )
        } else {
            format!(
                "lambda = {lambda} in (kappa, K] = ({}, {}]",
                self.kappa, self.k_sup
            )
        };
        for h in &self.hess {
            let v = lambda - h.lambda;
            let tag = if v < 0.0 {
                "center range"
            } else if v == 0.0 {
                "at Hessian threshold"
            } else {
                "sink/source range"
            };
            s.push_str(&format!(
                "; minimum at y = {:.6}: lambda_Hess = {:.6} ({tag})",
                h.y_min, h.lambda
            ));
        }
        s
    }
}

/// All roots of V0' on the circle, classified. Dense scan at 4096 * max_mode
/// samples for sign changes, then bisection and Newton polish to root_tol.
pub fn find_critical_points(b: &BoundaryData, cfg: &Config) -> Result<Vec<CriticalPoint>> {
    let ell = b.circumference;
    let dv = |y: f64| b.v0_coeffs.derivative(y, 1);
    let ddv = |y: f64| b.v0_coeffs.derivative(y, 2);

    if b.v0_coeffs.is_zero() || b.v0_coeffs.max_mode() == 0 {
        // constant potential: V0'' vanishes identically
        return Err(Error::NotMorse {
            y: 0.0,
            hess: 0.0,
            tol: cfg.morse_tol,
        });
    }

    let n = 4096 * b.v0_coeffs.max_mode() as usize;
    let h = ell / n as f64;
    let mut roots: Vec<f64> = Vec::new();

    let mut f_prev = dv(0.0);
    for i in 0..n {
        let y0 = i as f64 * h;
        let y1 = (i + 1) as f64 * h;
        let f1 = dv(y1);
        if f_prev == 0.0 {
            roots.push(y0);
        } else if f_prev * f1 < 0.0 {
            roots.push(bisect_newton(&dv, &ddv, y0, y1, cfg.root_tol)?);
        }
        f_prev = f1;
    }

    // merge duplicates modulo the period
    let merge_tol = (10.0 * cfg.root_tol).max(ell * 1e-13);
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < merge_tol);
    if roots.len() >= 2 {
        let wrap = roots[0] + ell - roots[roots.len() - 1];
        if wrap.abs() < merge_tol {
            roots.pop();
        }
    }

    if roots.is_empty() {
        return Err(Error::NoConvergence(
            "no critical points found on the circle".into(),
        ));
    }

    let mut crits = Vec::with_capacity(roots.len());
    for y_c in roots {
        let hess = ddv(y_c);
        if hess.abs() <= cfg.morse_tol {
            return Err(Error::NotMorse {
                y: y_c,
                hess: hess.abs(),
                tol: cfg.morse_tol,
            });
        }
        crits.push(CriticalPoint {
            y_c,
            kind: if hess > 0.0 {
                CritKind::Minimum
            } else {
                CritKind::Maximum
            },
            value: b.v0(y_c),
            hessian: hess,
            v1: b.v1(y_c),
        });
    }

    // Morse functions on a circle alternate min/max; a violation means the
    // scan missed a root.
    let m = crits.len();
    if m % 2 != 0 {
        return Err(Error::NoConvergence(format!(
            "odd number of critical points ({m}); scan resolution insufficient"
        )));
    }
    for i in 0..m {
        if crits[i].kind == crits[(i + 1) % m].kind {
            return Err(Error::NoConvergence(
                "critical point kinds do not alternate; scan resolution insufficient".into(),
            ));
        }
    }
    Ok(crits)
}

/// Bisection to a narrow bracket, then Newton polish. The bracket is
/// guaranteed by the sign change; Newton steps are rejected if they leave it.
fn bisect_newton(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = df(y);
        if d == 0.0 {
            break;
        }
        let step = f(y) / d;
        let y_new = y - step;
        if y_new < lo - tol || y_new > hi + tol {
            break;
        }
        y = y_new;
        if step.abs() < tol * 1e-2 {
            break;
        }
    }
    Ok(y)
}

/// kappa = inf V0, K = sup V0, the sorted critical values, and the Hessian
/// threshold lambda_Hess = V0 + 2 V0'' per minimum. For a smooth periodic
/// Morse function the extrema are critical points, so kappa and K come from
/// the critical values exactly.
pub fn thresholds(b: &BoundaryData, cfg: &Config) -> Result<Thresholds> {
    let crits = find_critical_points(b, cfg)?;
    let mut cv: Vec<f64> = crits.iter().map(|c| c.value).collect();
    cv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = cv.last().unwrap().abs().max(cv[0].abs()).max(1.0);
    cv.dedup_by(|a, b| (*a - *b).abs() < 1e-10 * scale);

    let hess = crits
        .iter()
        .filter(|c| c.kind == CritKind::Minimum)
        .map(|c| HessianThreshold {
            y_min: c.y_c,
            lambda: c.value + 2.0 * c.hessian,
        })
        .collect();

    Ok(Thresholds {
        kappa: cv[0],
        k_sup: *cv.last().unwrap(),
        cv,
        hess,
    })
}
