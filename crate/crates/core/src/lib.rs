//! Haar-wavelet synthesis of linear fractional and linear multifractional
//! stable motion.
//!
//! The field `X(u, v)` driven by a symmetric α-stable random measure is split
//! into a high-frequency part (the integral over `s > 0`) and a low-frequency
//! part (over `s < 0`). Each is expanded in Haar coefficients `ζ` of the
//! driving noise against the closed-form kernel `θ`, and truncated at a depth
//! `J`. A multifractional path is `Y(t) = X(t, H(t))`.
//!
//! Modules, bottom up:
//!
//! * [`stable`]: SαS sampling, Lévy paths on dyadic grids, the coefficient
//!   pyramid and its prefix sums.
//! * [`kernels`]: `θ`, its first difference `Θ` and their derivatives.
//! * [`series`]: truncated series, by direct or summation-by-parts evaluation.
//! * [`lmsm`]: Hurst functions and path synthesis.
//! * [`analysis`]: sup-norm rates, scale estimation and scale oracles.

pub mod analysis;
pub mod error;
pub mod kernels;
pub mod lmsm;
pub mod quadrature;
pub mod series;
pub mod stable;

pub use error::{Error, Result};
