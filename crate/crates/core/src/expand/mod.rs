//! Eigenfunction expansions at each kind of radial point, built as fields
//! on a collar grid, plus the characteristic-integral transport solver.

pub mod center;
pub mod saddle;
pub mod sink;
pub mod threshold;
pub mod transport;

pub use center::{build_center_eigenfunction, center_modes, CenterExpansion};
pub use saddle::{saddle_models, SaddleDirection, SaddleSeries};
pub use sink::{build_sink_eigenfunction, resonant_defect_c, sink_expansion, SinkExpansion};
pub use threshold::{build_threshold_eigenfunction, threshold_expansion, ThresholdExpansion};
pub use transport::transport_solve;

use num_complex::Complex64;

/// A front-face profile: a named Schwartz function of the blow-up variable.
/// Keeping these symbolic (rather than sampled) lets every builder evaluate
/// them exactly where the grid needs them.
#[derive(Debug, Clone)]
pub enum Profile {
    Zero,
    /// e^{−(Y−center)²/(2σ²)}
    Gaussian { sigma: f64, center: f64 },
    /// oscillator eigenfunction ψ_j(·; α)
    Oscillator { alpha: f64, j: usize },
    /// fixed linear combination of oscillator eigenfunctions
    OscillatorSum { alpha: f64, coeffs: Vec<Complex64> },
}

impl Profile {
    pub fn eval(&self, yy: f64) -> Complex64 {
        match self {
            Profile::Zero => Complex64::new(0.0, 0.0),
            Profile::Gaussian { sigma, center } => {
                let t = (yy - center) / sigma;
                Complex64::new((-0.5 * t * t).exp(), 0.0)
            }
            Profile::Oscillator { alpha, j } => {
                Complex64::new(crate::hermite::psi(*j, *alpha, yy), 0.0)
            }
            Profile::OscillatorSum { alpha, coeffs } => {
                let vals = crate::hermite::psi_all(coeffs.len(), *alpha, yy);
                coeffs
                    .iter()
                    .zip(&vals)
                    .map(|(c, v)| c * *v)
                    .sum()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::OscillatorSum { coeffs, .. } => coeffs.iter().all(|c| c.norm() == 0.0),
            _ => false,
        }
    }
}
