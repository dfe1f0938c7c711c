//! Scattering asymptotics on the collar of a 2-D manifold with an order-zero
//! potential: classification of radial points of the boundary contact flow,
//! phase/profile expansions of generalized eigenfunctions at centers, sinks,
//! thresholds and saddles, boundary pairings and an S-matrix, plus a
//! finite-difference limiting-absorption solver used as an independent check.
//!
//! The model operator throughout is
//!   P = (x^2 D_x)^2 + i x^3 D_x + x^2 D_y^2 + V0(y) + x V1(y)
//! acting on the half-cylinder x in (0, x_max], y on a circle, symmetric in
//! L^2(dx dy / x^3). In s = log x this is exactly -x^2 (d_ss + d_yy) + V0 + x V1,
//! which every grid routine here exploits.

pub mod boundary;
pub mod classical;
pub mod config;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod hermite;
pub mod legendrian;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod pairing;
pub mod series;
pub mod smatrix;

pub mod expand;

pub use config::Config;
pub use error::{Error, Result};
