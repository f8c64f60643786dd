//! High-frequency rows evaluated on a whole dyadic `u` grid at once.
//!
//! On `u_i = i / 2^G` with `G ≥ j`, write `i = m·s + r` where `s = 2^(G-j)`.
//! Then `2^j u_i - k = (m - k) + r/s`, so row `j` is, for every phase `r`, a
//! discrete convolution of `ζ_j` with the table `T_r[n] = θ(n + r/s)`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kernels::HaarKernel;
use crate::stable::CoefficientPyramid;

/// Rows at most this long are convolved directly.
const DIRECT_LIMIT: usize = 64;

/// `Σ_k ζ_k θ(2^j u_i - k)` for `u_i = i/2^level`, `i = 0, …, 2^level`.
/// The row weight `2^{-jv}` is not applied.
pub fn hf_row_on_dyadic_grid(kernel: &HaarKernel, zeta: &[f64], level: usize) -> Result<Vec<f64>> {
    let n = zeta.len();
    if !n.is_power_of_two() {
        return Err(Error::Parameter(format!("row length {n} is not a power of two")));
    }
    let j = n.trailing_zeros() as usize;
    if level < j || level > 30 {
        return Err(Error::Parameter(format!(
            "grid level {level} must lie in [{j}, 30] for row {j}"
        )));
    }
    let phases = 1usize << (level - j);
    let mut out = vec![0.0; (1usize << level) + 1];
    let table = |r: usize| -> Vec<f64> {
        let frac = r as f64 / phases as f64;
        (0..=n).map(|m| kernel.theta(m as f64 + frac)).collect()
    };

    if n <= DIRECT_LIMIT {
        for r in 0..phases {
            let t = table(r);
            let last = if r == 0 { n } else { n - 1 };
            for m in 0..=last {
                let mut acc = 0.0;
                for (k, z) in zeta.iter().enumerate().take(m + 1) {
                    acc += z * t[m - k];
                }
                out[m * phases + r] = acc;
            }
        }
        return Ok(out);
    }

    let size = (4 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let mut zeta_hat: Vec<Complex<f64>> = zeta
        .iter()
        .map(|&z| Complex::new(z, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    forward.process(&mut zeta_hat);
    let norm = 1.0 / size as f64;
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for r in 0..phases {
        let t = table(r);
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (c, &x) in buf.iter_mut().zip(&t) {
            c.re = x;
        }
        forward.process(&mut buf);
        for (c, z) in buf.iter_mut().zip(&zeta_hat) {
            *c *= z;
        }
        inverse.process(&mut buf);
        let last = if r == 0 { n } else { n - 1 };
        for m in 0..=last {
            out[m * phases + r] = buf[m].re * norm;
        }
    }
    Ok(out)
}

/// `X₁ᴶ(u_i, v)` on `u_i = i/2^level`, every row through
/// [`hf_row_on_dyadic_grid`]. Requires `level ≥ J - 1`.
pub fn hf_field_on_dyadic_grid(
    kernel: &HaarKernel,
    pyr: &CoefficientPyramid,
    v: f64,
    depth: usize,
    level: usize,
) -> Result<Vec<f64>> {
    if depth > pyr.hf_depth() {
        return Err(Error::Depth {
            what: "high-frequency rows",
            requested: depth,
            available: pyr.hf_depth(),
        });
    }
    let count = (1usize << level) + 1;
    let step = (-(level as f64)).exp2();
    let q = kernel.q();
    let mut out: Vec<f64> = (0..count)
        .map(|i| (i as f64 * step).powf(q) / q * pyr.z1())
        .collect();
    for j in 0..depth {
        let row = hf_row_on_dyadic_grid(kernel, pyr.hf_row(j), level)?;
        let scale = (-(j as f64) * v).exp2();
        for (o, r) in out.iter_mut().zip(row) {
            *o += scale * r;
        }
    }
    Ok(out)
}
