//! The Haar kernel `θ`, its first difference `Θ` and their `x`-derivatives.
//!
//! With `p = v - 1/α` and `q = 1 + p`:
//!
//! ```text
//! θ(x)   = ((x-1)_+^q - 2 (x-½)_+^q + x_+^q) / q
//! Θ(x)   = θ(x) - θ(x-1) = Σ_l d_l (x - l/2)_+^q / q,   d = (1, -2, 0, 2, -1)
//! ∂ₓθ(x) = (x-1)_+^p - 2 (x-½)_+^p + x_+^p
//! ∂ₓΘ(x) = Σ_l d_l (x - l/2)_+^p
//! ```
//!
//! For large `x` the brackets cancel to `O(x^{q-2})` (`θ`) and `O(x^{q-3})`
//! (`Θ`), so past `switch_x` the terms are expanded binomially in `1/x` and
//! the cancelling low orders dropped symbolically. The tail is summed until
//! it no longer changes the result, which keeps the relative error near
//! machine precision for every `x > switch_x ≥ 4`.

use crate::error::{Error, Result};

/// `d_0, …, d_4`.
pub const D_COEFFS: [f64; 5] = [1.0, -2.0, 0.0, 2.0, -1.0];

/// Default threshold past which the binomial expansion is used.
pub const DEFAULT_SWITCH_X: f64 = 8.0;

const MAX_TERMS: i32 = 200;

/// `s^κ` for `s > 0`, `0` otherwise.
#[inline]
pub fn truncated_power(s: f64, kappa: f64) -> f64 {
    if s > 0.0 {
        s.powf(kappa)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    alpha: f64,
    switch_x: f64,
}

impl KernelParams {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_switch(alpha, DEFAULT_SWITCH_X)
    }

    pub fn with_switch(alpha: f64, switch_x: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Parameter(format!(
                "stability index alpha must lie in (1,2), got {alpha}"
            )));
        }
        if !(switch_x >= 4.0 && switch_x.is_finite()) {
            return Err(Error::Parameter(format!("switch_x must be finite and ≥ 4, got {switch_x}")));
        }
        Ok(Self { alpha, switch_x })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn switch_x(&self) -> f64 {
        self.switch_x
    }

    /// The kernel at Hurst parameter `v`.
    pub fn kernel(&self, v: f64) -> Result<HaarKernel> {
        HaarKernel::new(v, self)
    }
}

/// The kernel family at one fixed `v`, with exponents precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarKernel {
    p: f64,
    q: f64,
    switch_x: f64,
}

impl HaarKernel {
    /// Requires `1/α < v < 1`.
    pub fn new(v: f64, params: &KernelParams) -> Result<Self> {
        let lower = 1.0 / params.alpha;
        if !(v > lower && v < 1.0) {
            return Err(Error::Parameter(format!(
                "v must lie in (1/alpha, 1) = ({lower}, 1), got {v}"
            )));
        }
        Self::from_exponent(v - lower, params.switch_x)
    }

    /// Kernel with truncated-power exponent `p` directly, for any
    /// `p ∈ (-1, 1)`. This reaches `v ≤ 1/α`, where the kernel is still
    /// well defined though outside the model's parameter range.
    pub fn from_exponent(p: f64, switch_x: f64) -> Result<Self> {
        if !(p > -1.0 && p < 1.0) {
            return Err(Error::Parameter(format!("exponent p must lie in (-1, 1), got {p}")));
        }
        if !(switch_x >= 4.0 && switch_x.is_finite()) {
            return Err(Error::Parameter(format!("switch_x must be finite and ≥ 4, got {switch_x}")));
        }
        Ok(Self {
            p,
            q: 1.0 + p,
            switch_x,
        })
    }

    /// `p = v - 1/α`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `q = 1 + p`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn switch_x(&self) -> f64 {
        self.switch_x
    }

    #[inline]
    pub fn theta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x > self.switch_x {
            x.powf(self.q) / self.q * theta_series(self.q, x)
        } else {
            self.theta_direct(x)
        }
    }

    /// The three-term closed form, with no large-`x` treatment.
    #[inline]
    pub fn theta_direct(&self, x: f64) -> f64 {
        let q = self.q;
        (truncated_power(x - 1.0, q) - 2.0 * truncated_power(x - 0.5, q) + truncated_power(x, q)) / q
    }

    #[inline]
    pub fn big_theta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x > self.switch_x {
            x.powf(self.q) / self.q * big_theta_series(self.q, x)
        } else {
            self.big_theta_direct(x)
        }
    }

    /// The five-term closed form, with no large-`x` treatment.
    #[inline]
    pub fn big_theta_direct(&self, x: f64) -> f64 {
        five_term(self.q, x) / self.q
    }

    #[inline]
    pub fn dtheta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x > self.switch_x {
            x.powf(self.p) * theta_series(self.p, x)
        } else {
            let p = self.p;
            truncated_power(x - 1.0, p) - 2.0 * truncated_power(x - 0.5, p) + truncated_power(x, p)
        }
    }

    #[inline]
    pub fn dbig_theta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x > self.switch_x {
            x.powf(self.p) * big_theta_series(self.p, x)
        } else {
            five_term(self.p, x)
        }
    }

    // The increment series stays accurate well below `switch_x`, where the
    // five-term difference of increments already loses a few digits.
    fn increment_switch(&self) -> f64 {
        (0.5 * self.switch_x).max(4.0).min(self.switch_x)
    }

    /// `θ(x + y) - θ(x)` for `y ≥ 0`. Exact up to rounding even when
    /// `y ≪ x`, where the plain difference would cancel.
    pub fn theta_increment(&self, x: f64, y: f64) -> f64 {
        let q = self.q;
        if !(y > 0.0) || x <= 0.0 {
            self.theta(x + y) - self.theta(x)
        } else if x > self.increment_switch() {
            series_increment(q, x, y, -1.0 / x, 2, theta_weights(q)) / q
        } else if x + y <= self.switch_x {
            (power_increment(x - 1.0, y, q) - 2.0 * power_increment(x - 0.5, y, q) + power_increment(x, y, q)) / q
        } else {
            self.theta(x + y) - self.theta(x)
        }
    }

    /// `Θ(x + y) - Θ(x)` for `y ≥ 0`, with the same accuracy as
    /// [`theta_increment`](Self::theta_increment).
    pub fn big_theta_increment(&self, x: f64, y: f64) -> f64 {
        let q = self.q;
        if !(y > 0.0) || x <= 0.0 {
            self.big_theta(x + y) - self.big_theta(x)
        } else if x > self.increment_switch() {
            series_increment(q, x, y, -0.5 / x, 3, big_theta_weights(q)) / q
        } else if x + y <= self.switch_x {
            (power_increment(x, y, q) - 2.0 * power_increment(x - 0.5, y, q) + 2.0 * power_increment(x - 1.5, y, q)
                - power_increment(x - 2.0, y, q))
                / q
        } else {
            self.big_theta(x + y) - self.big_theta(x)
        }
    }
}

/// `(s + y)_+^κ - s_+^κ` for `y ≥ 0`, free of cancellation when `y ≪ s`.
#[inline]
fn power_increment(s: f64, y: f64, kappa: f64) -> f64 {
    if s > 0.0 {
        s.powf(kappa) * (kappa * (y / s).ln_1p()).exp_m1()
    } else {
        truncated_power(s + y, kappa)
    }
}

#[inline]
fn five_term(kappa: f64, x: f64) -> f64 {
    // d_2 = 0, so the middle term is skipped.
    truncated_power(x, kappa) - 2.0 * truncated_power(x - 0.5, kappa) + 2.0 * truncated_power(x - 1.5, kappa)
        - truncated_power(x - 2.0, kappa)
}

/// Weights `w_n` of the `θ` bracket `Σ_{n≥2} w_n (-1/x)^n`:
/// `w_n = C(κ,n) (1 - 2^{1-n})`. Yields from `n = 1`.
fn theta_weights(kappa: f64) -> impl FnMut(i32) -> f64 {
    let mut coeff = 1.0;
    let mut half = 1.0;
    move |n| {
        coeff *= (kappa - f64::from(n) + 1.0) / f64::from(n);
        half *= 0.5;
        coeff * (1.0 - 2.0 * half)
    }
}

/// Weights of the `Θ` bracket `Σ_{n≥3} w_n (-1/(2x))^n`:
/// `w_n = C(κ,n) m_n` with `m_n = Σ_l d_l l^n = -2 + 2·3^n - 4^n`.
/// Yields from `n = 1`.
fn big_theta_weights(kappa: f64) -> impl FnMut(i32) -> f64 {
    let mut coeff = 1.0;
    let mut three = 1.0;
    let mut four = 1.0;
    move |n| {
        coeff *= (kappa - f64::from(n) + 1.0) / f64::from(n);
        three *= 3.0;
        four *= 4.0;
        coeff * (-2.0 + 2.0 * three - four)
    }
}

/// `Σ_{n≥first} w_n z^n`, summed until the tail no longer matters.
fn bracket(z: f64, first: i32, mut weight: impl FnMut(i32) -> f64) -> f64 {
    let mut zn = 1.0;
    let mut sum = 0.0;
    for n in 1..=MAX_TERMS {
        zn *= z;
        let w = weight(n);
        if n < first {
            continue;
        }
        let term = w * zn;
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-2 * sum.abs() {
            break;
        }
    }
    sum
}

/// The bracket of `θ` divided by `x^κ`. Converges for `x > 1`.
fn theta_series(kappa: f64, x: f64) -> f64 {
    bracket(-1.0 / x, 2, theta_weights(kappa))
}

/// The bracket of `Θ` divided by `x^κ`. Converges for `x > 2`.
fn big_theta_series(kappa: f64, x: f64) -> f64 {
    bracket(-0.5 / x, 3, big_theta_weights(kappa))
}

/// `(x+y)^κ B(x+y) - x^κ B(x)` for a bracket `B` in powers of `z ∝ 1/x`.
///
/// With `t = y/x`, the `n`-th term changes by the factor
/// `1 + δ_n = (1+t)^{-n}`, and `δ_{n+1} = (δ_n - t)/(1+t)` is computed
/// without cancellation, as is `(1+t)^κ - 1`.
fn series_increment(kappa: f64, x: f64, y: f64, z: f64, first: i32, mut weight: impl FnMut(i32) -> f64) -> f64 {
    let t = y / x;
    let shrink = 1.0 / (1.0 + t);
    let mut zn = 1.0;
    let mut delta = 0.0;
    let (mut shifted, mut change) = (0.0, 0.0);
    for n in 1..=MAX_TERMS {
        zn *= z;
        delta = (delta - t) * shrink;
        let w = weight(n);
        if n < first {
            continue;
        }
        let term = w * zn;
        shifted += term * (1.0 + delta);
        change += term * delta;
        let tiny = f64::EPSILON * 1e-2;
        if term.abs() <= tiny * shifted.abs() && (term * delta).abs() <= tiny * change.abs() {
            break;
        }
    }
    let growth = (kappa * t.ln_1p()).exp_m1();
    x.powf(kappa) * (growth * shifted + change)
}

/// `Σ_l d_l l^n`.
pub fn d_moment(n: u32) -> f64 {
    D_COEFFS
        .iter()
        .enumerate()
        .map(|(l, d)| d * (l as f64).powi(n as i32))
        .sum()
}

/// `θ(x, v)`; fails unless `1/α < v < 1`.
pub fn theta(x: f64, v: f64, params: &KernelParams) -> Result<f64> {
    Ok(params.kernel(v)?.theta(x))
}

/// `Θ(x, v) = θ(x, v) - θ(x-1, v)`.
pub fn big_theta(x: f64, v: f64, params: &KernelParams) -> Result<f64> {
    Ok(params.kernel(v)?.big_theta(x))
}

/// `∂ₓθ(x, v)`; at kink points the right-limit convention of the truncated
/// power applies.
pub fn dtheta_dx(x: f64, v: f64, params: &KernelParams) -> Result<f64> {
    Ok(params.kernel(v)?.dtheta(x))
}

/// `∂ₓΘ(x, v)`.
pub fn dbig_theta_dx(x: f64, v: f64, params: &KernelParams) -> Result<f64> {
    Ok(params.kernel(v)?.dbig_theta(x))
}

/// Quadrature of the defining integral, for testing the closed forms.
pub mod oracle {
    use crate::error::{Error, Result};
    use crate::quadrature::{integrate, Tolerance};

    /// `∫ (x-s)_+^p h(s) ds` for the Haar wavelet `h = 1_{[0,½)} - 1_{[½,1)}`,
    /// with `p = v - 1/α`, by adaptive quadrature to absolute `1e-12`.
    ///
    /// Each piece `[a, b]` of the support below `x` is integrated in the
    /// variable `w` with `s = x - w²`, which smooths the endpoint behaviour of
    /// `(x-s)^p` without evaluating the closed form.
    pub fn theta_quadrature_oracle(x: f64, v: f64, alpha: f64) -> Result<f64> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Parameter(format!("alpha must lie in (1,2), got {alpha}")));
        }
        exponent_oracle(x, v - 1.0 / alpha)
    }

    /// Same integral, for an explicit exponent `p > -1`.
    pub fn exponent_oracle(x: f64, p: f64) -> Result<f64> {
        if !(p > -1.0 && p < 1.0) {
            return Err(Error::Parameter(format!("exponent p must lie in (-1,1), got {p}")));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        let tol = Tolerance::new(1e-13, 1e-13);
        let mut total = 0.0;
        for (lo, hi, sign) in [(0.0, 0.5, 1.0), (0.5, 1.0, -1.0)] {
            let b = f64::min(hi, x);
            if b <= lo {
                continue;
            }
            // s ∈ [lo, b] ↔ w ∈ [sqrt(x-b), sqrt(x-lo)], ds = -2w dw.
            let w0 = (x - b).sqrt();
            let w1 = (x - lo).sqrt();
            let est = integrate(|w: f64| 2.0 * w * super::truncated_power(w * w, p), w0, w1, tol)?;
            total += sign * est.value;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(alpha: f64, v: f64) -> HaarKernel {
        KernelParams::new(alpha).unwrap().kernel(v).unwrap()
    }

    #[test]
    fn truncated_power_branches() {
        assert_eq!(truncated_power(-1.0, 0.3), 0.0);
        assert_eq!(truncated_power(0.0, 0.3), 0.0);
        assert_eq!(truncated_power(4.0, 0.5), 2.0);
    }

    #[test]
    fn parameter_checks() {
        let params = KernelParams::new(1.5).unwrap();
        assert!(theta(1.0, 0.6, &params).is_err());
        assert!(theta(1.0, 1.0, &params).is_err());
        assert!(theta(1.0, 0.75, &params).is_ok());
        assert!(KernelParams::with_switch(1.5, 3.9).is_err());
        assert!(KernelParams::new(2.0).is_err());
        assert!(HaarKernel::from_exponent(-1.0, 8.0).is_err());
        assert!(HaarKernel::from_exponent(-0.07, 8.0).is_ok());
    }

    #[test]
    fn moments_of_d() {
        assert_eq!(d_moment(0), 0.0);
        assert_eq!(d_moment(1), 0.0);
        assert_eq!(d_moment(2), 0.0);
        assert_eq!(d_moment(3), -12.0);
        for n in 1..12 {
            let closed = -2.0 + 2.0 * 3f64.powi(n as i32) - 4f64.powi(n as i32);
            assert_eq!(d_moment(n), closed);
        }
    }

    #[test]
    fn small_values_match_closed_form_by_hand() {
        let k = kernel(1.25, 0.9);
        let q = 1.1f64;
        assert!((k.theta(0.5) - 0.5f64.powf(q) / q).abs() < 1e-15);
        assert!((k.theta(1.0) - (1.0 - 2.0 * 0.5f64.powf(q)) / q).abs() < 1e-15);
        assert_eq!(k.big_theta(0.5), k.theta(0.5));
    }

    #[test]
    fn series_agrees_with_direct_form_near_the_switch() {
        for &(alpha, v) in &[(1.5, 0.8), (1.25, 0.9), (1.9, 0.55), (1.1, 0.95)] {
            let k = kernel(alpha, v);
            for &x in &[4.5f64, 6.0, 8.5, 12.0] {
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
                let q = k.q();
                let p = k.p();
                assert!(rel(x.powf(q) / q * theta_series(q, x), k.theta_direct(x)) < 1e-11);
                assert!(rel(x.powf(q) / q * big_theta_series(q, x), k.big_theta_direct(x)) < 1e-10);
                let dt = truncated_power(x - 1.0, p) - 2.0 * truncated_power(x - 0.5, p) + x.powf(p);
                assert!(rel(x.powf(p) * theta_series(p, x), dt) < 1e-10);
                assert!(rel(x.powf(p) * big_theta_series(p, x), five_term(p, x)) < 1e-9);
            }
        }
    }

    #[test]
    fn everything_vanishes_left_of_the_origin() {
        let k = kernel(1.5, 0.8);
        for &x in &[-1e6, -3.0, -0.5, -1e-300, 0.0] {
            assert_eq!(k.theta(x), 0.0);
            assert_eq!(k.big_theta(x), 0.0);
            assert_eq!(k.dtheta(x), 0.0);
            assert_eq!(k.dbig_theta(x), 0.0);
        }
    }

    #[test]
    fn oracle_is_zero_for_nonpositive_x() {
        assert_eq!(oracle::theta_quadrature_oracle(0.0, 0.8, 1.5).unwrap(), 0.0);
        assert_eq!(oracle::theta_quadrature_oracle(-2.0, 0.8, 1.5).unwrap(), 0.0);
    }
}
