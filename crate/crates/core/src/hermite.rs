//! Scaled harmonic-oscillator eigenfunctions.
//!
//! `psi(j, alpha, y)` is the L²-normalized eigenfunction of D_Y² + α²Y²
//! with eigenvalue α(2j+1):
//!
//!   ψ_j(Y) = (α/π)^{1/4} / sqrt(2^j j!) · H_j(√α Y) e^{−αY²/2}.
//!
//! Evaluation uses the normalized three-term recurrence, which is stable
//! for all j and avoids overflow in H_j and j!.

/// ψ_0 .. ψ_{j_max-1} at a single point.
pub fn psi_all(j_max: usize, alpha: f64, y: f64) -> Vec<f64> {
    assert!(alpha > 0.0, "oscillator frequency must be positive");
    let xi = alpha.sqrt() * y;
    let mut out = Vec::with_capacity(j_max);
    if j_max == 0 {
        return out;
    }
    // (α/π)^{1/4} e^{−ξ²/2}; underflows harmlessly to 0 for huge |ξ|
    let psi0 = (alpha / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
    out.push(psi0);
    if j_max == 1 {
        return out;
    }
    out.push((2.0f64).sqrt() * xi * psi0);
    for j in 1..j_max - 1 {
        let jf = j as f64;
        // ψ_{j+1} = sqrt(2/(j+1)) ξ ψ_j − sqrt(j/(j+1)) ψ_{j−1}
        let next = (2.0 / (jf + 1.0)).sqrt() * xi * out[j] - (jf / (jf + 1.0)).sqrt() * out[j - 1];
        out.push(next);
    }
    out
}

/// Single eigenfunction value.
pub fn psi(j: usize, alpha: f64, y: f64) -> f64 {
    psi_all(j + 1, alpha, y)[j]
}

/// dψ_j/dY, from ψ_j' = √α (√(j/2) ψ_{j−1} − √((j+1)/2) ψ_{j+1}).
pub fn psi_deriv(j: usize, alpha: f64, y: f64) -> f64 {
    let v = psi_all(j + 2, alpha, y);
    let lower = if j == 0 {
        0.0
    } else {
        (j as f64 / 2.0).sqrt() * v[j - 1]
    };
    let upper = ((j as f64 + 1.0) / 2.0).sqrt() * v[j + 1];
    alpha.sqrt() * (lower - upper)
}
