//! Small dense/banded numerical kernels shared by the grid code: Fornberg
//! finite-difference weights, a complex banded LU, and restarted GMRES.

use num_complex::Complex64;

/// Finite-difference weights for the m-th derivative at `z` from the nodes
/// `x` (Fornberg's recurrence). Exact for polynomials of degree x.len()-1.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Complex band matrix in LAPACK-style band storage with kl sub- and ku
/// superdiagonals, factored in place with partial pivoting.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Storage with 2*kl + ku + 1 rows: row kl + ku + i - j holds A[i][j].
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor a band matrix given as `get(i, j)` over |i - j| <= band.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        get: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Self, String> {
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![Complex64::new(0.0, 0.0); ldab * n];
        // column-major bands: ab[row + col*ldab], row = kl + ku + i - j
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                ab[kl + ku + i - j + j * ldab] = get(i, j);
            }
        }
        let mut ipiv = vec![0usize; n];
        // banded LU with partial pivoting (gbtrf-style), fill confined to
        // kl extra superdiagonals which the storage already reserves
        for k in 0..n {
            let pmax = (k + kl).min(n - 1);
            let mut piv = k;
            let mut pval = ab[kl + ku + k - k + k * ldab].norm();
            for i in (k + 1)..=pmax {
                let v = ab[kl + ku + i - k + k * ldab].norm();
                if v > pval {
                    piv = i;
                    pval = v;
                }
            }
            if pval == 0.0 {
                return Err(format!("singular pivot at column {k}"));
            }
            ipiv[k] = piv;
            let jmax = (k + kl + ku).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let a = kl + ku + k - j + j * ldab;
                    let b = kl + ku + piv - j + j * ldab;
                    ab.swap(a, b);
                }
            }
            let pivot = ab[kl + ku + k * ldab];
            for i in (k + 1)..=pmax {
                let idx = kl + ku + i - k + k * ldab;
                let l = ab[idx] / pivot;
                ab[idx] = l;
                for j in (k + 1)..=jmax {
                    let up = ab[kl + ku + k - j + j * ldab];
                    ab[kl + ku + i - j + j * ldab] -= l * up;
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab, ipiv })
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        // forward: apply L^-1 with row swaps
        for k in 0..n {
            let piv = self.ipiv[k];
            if piv != k {
                b.swap(k, piv);
            }
            let bk = b[k];
            let imax = (k + kl).min(n - 1);
            for i in (k + 1)..=imax {
                let l = self.ab[kl + ku + i - k + k * ldab];
                b[i] -= l * bk;
            }
        }
        // back substitution with U (bandwidth kl + ku after pivoting)
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for j in (k + 1)..=jmax {
                s -= self.ab[kl + ku + k - j + j * ldab] * b[j];
            }
            b[k] = s / self.ab[kl + ku + k * ldab];
        }
    }
}

/// Right-preconditioned restarted GMRES for a matrix-free complex operator.
/// Returns (solution, relative residual, iterations).
pub fn gmres(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    precond: &dyn Fn(&mut [Complex64]),
    rhs: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<Complex64>, f64, usize) {
    let n = rhs.len();
    let bnorm = norm2(rhs).max(f64::MIN_POSITIVE);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); n]);
    let mut total_iters = 0;
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut res = f64::INFINITY;

    'outer: while total_iters < max_iter {
        // r = b - A x
        apply(&x, &mut tmp);
        let mut r: Vec<Complex64> = rhs.iter().zip(&tmp).map(|(b, a)| b - a).collect();
        let beta = norm2(&r);
        res = beta / bnorm;
        if res < tol {
            break;
        }
        for v in &mut r {
            *v /= beta;
        }
        let m = restart.min(max_iter - total_iters);
        let mut basis: Vec<Vec<Complex64>> = vec![r];
        let mut h = vec![vec![Complex64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![Complex64::new(0.0, 0.0); m];
        let mut sn = vec![Complex64::new(0.0, 0.0); m];
        let mut g = vec![Complex64::new(0.0, 0.0); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;

        for k in 0..m {
            total_iters += 1;
            // w = A M^-1 v_k
            let mut z = basis[k].clone();
            precond(&mut z);
            apply(&z, &mut tmp);
            let mut w = tmp.clone();
            // modified Gram-Schmidt
            for j in 0..=k {
                let hjk = dot(&basis[j], &w);
                h[j][k] = hjk;
                for (wi, vj) in w.iter_mut().zip(&basis[j]) {
                    *wi -= hjk * vj;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = Complex64::new(wn, 0.0);
            // apply accumulated Givens rotations to the new column
            for j in 0..k {
                let t = cs[j].conj() * h[j][k] + sn[j].conj() * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            // new rotation to kill h[k+1][k]
            let (a, b) = (h[k][k], h[k + 1][k]);
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if rho == 0.0 {
                cs[k] = Complex64::new(1.0, 0.0);
                sn[k] = Complex64::new(0.0, 0.0);
            } else {
                cs[k] = a / rho;
                sn[k] = b / rho;
            }
            h[k][k] = cs[k].conj() * a + sn[k].conj() * b;
            h[k + 1][k] = Complex64::new(0.0, 0.0);
            let t = cs[k].conj() * g[k];
            g[k + 1] = -sn[k] * g[k];
            g[k] = t;
            k_used = k + 1;
            res = g[k + 1].norm() / bnorm;
            if res < tol || wn == 0.0 {
                break;
            }
            for v in &mut w {
                *v /= wn;
            }
            basis.push(w);
        }

        // back-substitute y from the triangularized H, then x += M^-1 (V y)
        let mut y = vec![Complex64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![Complex64::new(0.0, 0.0); n];
        for (j, yj) in y.iter().enumerate() {
            for (u, v) in update.iter_mut().zip(&basis[j]) {
                *u += yj * v;
            }
        }
        precond(&mut update);
        for (xi, u) in x.iter_mut().zip(&update) {
            *xi += u;
        }
        if res < tol {
            break 'outer;
        }
    }
    (x, res, total_iters)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear in the first argument: sum conj(a_i) b_i.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
