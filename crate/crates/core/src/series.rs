//! Generalized power series on an exponent lattice.
//!
//! Terms are c · x^{k + j·r} (y − y_c)^m with integer k, j and a fixed real
//! lattice generator r. Keeping (k, j) as exact integers makes exponent
//! equality a key comparison rather than a floating-point test; the only
//! tolerance question left is whether k + r·(j+m) vanishes in a solve, which
//! is exactly the resonant-exponent condition.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// (k, j, m): coefficient of x^{k + j r} y^m.
pub type TermKey = (i32, i32, u32);

#[derive(Debug, Clone)]
pub struct PowerSeries {
    pub r: f64,
    pub terms: BTreeMap<TermKey, Complex64>,
}

impl PowerSeries {
    pub fn new(r: f64) -> Self {
        PowerSeries {
            r,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(r: f64, k: i32, j: i32, m: u32, c: Complex64) -> Self {
        let mut s = Self::new(r);
        s.add_term((k, j, m), c);
        s
    }

    pub fn x_exponent(&self, k: i32, j: i32) -> f64 {
        k as f64 + j as f64 * self.r
    }

    pub fn add_term(&mut self, key: TermKey, c: Complex64) {
        let e = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&mut self, other: &PowerSeries) {
        assert_eq!(self.r, other.r, "lattice generators must match");
        for (&k, &c) in &other.terms {
            self.add_term(k, c);
        }
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in self.terms.values_mut() {
            *v *= c;
        }
    }

    /// Drop terms smaller than tol relative to the largest coefficient.
    pub fn prune(&mut self, tol: f64) {
        let max = self
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if max == 0.0 {
            return;
        }
        self.terms.retain(|_, c| c.norm() >= tol * max);
    }

    /// Σ c x^{k+jr} dy^m (dy already centered).
    pub fn eval(&self, x: f64, dy: f64) -> Complex64 {
        let lx = x.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        for (&(k, j, m), &c) in &self.terms {
            let xe = (self.x_exponent(k, j) * lx).exp();
            sum += c * xe * dy.powi(m as i32);
        }
        sum
    }

    /// Smallest real x-exponent present.
    pub fn min_x_exponent(&self) -> Option<f64> {
        self.terms
            .keys()
            .map(|&(k, j, _)| self.x_exponent(k, j))
            .fold(None, |acc, e| {
                Some(match acc {
                    None => e,
                    Some(a) => a.min(e),
                })
            })
    }
}
