//! Symmetric α-stable sampling, Lévy paths on dyadic grids and the Haar
//! coefficient pyramid built from them.
//!
//! Scale convention: a symmetric α-stable variable with scale `σ` has
//! characteristic function `exp(-σ^α |t|^α)`. With this convention the Haar
//! coefficients of the driving noise have scale exactly 1.

mod container;
mod levy;
mod pyramid;

pub use container::{read_pyramid, write_pyramid, PYRAMID_MAGIC, PYRAMID_VERSION};
pub use levy::{build_levy_grid, build_levy_path, LevyGrid};
pub use pyramid::{
    generate_coefficients, prefix_sums, zeta_from_levy, CoefficientMode, CoefficientPyramid,
    PrefixSums, PyramidSpec, DEFAULT_ENTRY_BUDGET,
};

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random stream type used throughout the crate. ChaCha is counter based, so
/// independent streams keyed by `(seed, stream id)` can be consumed in any
/// order or in parallel without changing their contents.
pub type StableRng = ChaCha8Rng;

/// Stream identifiers; each logical consumer of randomness owns one.
pub mod streams {
    /// Increments of the Lévy path on the positive half-line.
    pub const POSITIVE_PATH: u64 = 1;
    /// Increments of the Lévy path on the negative half-line.
    pub const NEGATIVE_PATH: u64 = 2;
    /// `Z(1)` in independent mode.
    pub const Z1: u64 = 3;
    /// Generic sampler stream for callers that just want draws.
    pub const DRAWS: u64 = 4;

    const HF_ROW_BASE: u64 = 1 << 20;
    const LF_ROW_BASE: u64 = 2 << 20;

    /// Independent-mode high-frequency row `j`.
    pub fn hf_row(j: usize) -> u64 {
        HF_ROW_BASE + j as u64
    }

    /// Independent-mode low-frequency row `j` (which may be negative).
    pub fn lf_row(j: i32) -> u64 {
        LF_ROW_BASE + (i64::from(j) + (1 << 16)) as u64
    }
}

/// Opens stream `stream` of the generator keyed by `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> StableRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives the seed of replicate `index` from a base seed (splitmix64 mixing).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "stability index alpha must lie in (1,2), got {alpha}"
        )))
    }
}

/// Stability index and scale of a symmetric α-stable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    alpha: f64,
    scale: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { alpha, scale })
    }

    /// Unit-scale law.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// One draw, by the Chambers–Mallows–Stuck method specialised to the
    /// symmetric case.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * standard_draw(self.alpha, rng)
    }

    /// Fills `out` with independent draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.sample(rng);
        }
    }
}

/// One draw from `law`; see [`StableLaw::sample`].
pub fn sample_sas<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

#[inline]
fn standard_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    // V uniform on the open interval (-π/2, π/2), W standard exponential.
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break (u - 0.5) * 2.0 * FRAC_PI_2;
        }
    };
    let w = loop {
        let u: f64 = rng.random();
        let w = -(-u).ln_1p();
        if w > 0.0 {
            break w;
        }
    };
    let cos_v = v.cos();
    let head = (alpha * v).sin() / cos_v.powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    head * tail
}
