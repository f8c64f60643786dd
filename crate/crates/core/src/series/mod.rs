//! Truncated Haar series of the generating field.
//!
//! With `q = 1 + v - 1/α` and `θ` the kernel at `v`:
//!
//! ```text
//! X₁ᴶ(u,v)  = u^q/q · Z(1) + Σ_{j=0}^{J-1} 2^{-jv} Σ_{k=0}^{2^j-1} ζ_{j,k} θ(2^j u - k)
//! X₂ᴶ(u,v)  = Σ_{j=1-J}^{J-1} 2^{-jv} Σ_{k=1}^{2^{J-|j|}} ζ_{j,-k} (θ(2^j u + k) - θ(k))
//! ```
//!
//! `X₂ᴶ` splits into the rows `j ≥ 0` ([`x2_plus_partial`]) and the rows
//! `j < 0` ([`x2_minus_partial`]).
//!
//! Every row can be summed directly ([`Method::Naive`]) or after summation by
//! parts against the prefix sums `λ` ([`Method::Abel`]):
//!
//! ```text
//! Σ_{k<n} ζ_k θ(y-k)       = λ_{n-1} θ(y-n+1) + Σ_{k≤n-2} λ_k Θ(y-k)
//! Σ_{k=1}^{N} ζ_{-k} g(k)  = λ_{-N} g(N) - Σ_{k=2}^{N} λ_{-(k-1)} (Θ(y+k) - Θ(k))
//! ```
//!
//! where `g(k) = θ(y+k) - θ(k)`. Both forms are exact rearrangements. The
//! differences `g` and `Θ(y+k) - Θ(k)` are evaluated as increments, which
//! stay accurate when `y ≪ k` (small `u` on the rows `j < 0`).

mod dyadic;
mod field;

pub use dyadic::{hf_field_on_dyadic_grid, hf_row_on_dyadic_grid};
pub use field::{evaluate_field, evaluate_field_serial, linspace, Component, EvalDomain, FieldSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{HaarKernel, KernelParams};
use crate::stable::{prefix_sums, CoefficientPyramid, PrefixSums};

/// Rows longer than this are accumulated pairwise.
pub const PAIRWISE_THRESHOLD: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    #[default]
    Abel,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Abel => "abel",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "abel" => Ok(Method::Abel),
            other => Err(Error::Parameter(format!("unknown summation method `{other}`"))),
        }
    }
}

/// Truncation depths of the high- and low-frequency series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub hf: usize,
    pub lf: usize,
}

impl Truncation {
    pub fn new(hf: usize, lf: usize) -> Self {
        Self { hf, lf }
    }
}

/// `Σ_{i<n} term(i)`, in increasing `i`; blocks longer than
/// [`PAIRWISE_THRESHOLD`] are split in halves and the halves added.
pub fn pairwise_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        if hi - lo <= PAIRWISE_THRESHOLD {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, n, &term)
}

/// Number of `k ∈ [0, n)` with `y - k > 0`.
#[inline]
fn active_terms(y: f64, n: usize) -> usize {
    if y <= 0.0 {
        0
    } else {
        let c = y.ceil();
        if c >= n as f64 {
            n
        } else {
            c as usize
        }
    }
}

/// `Σ_{k<n} ζ_k θ(y-k)` for one high-frequency row.
pub fn hf_row_sum(kernel: &HaarKernel, zeta: &[f64], lambda: &[f64], y: f64, method: Method) -> f64 {
    let n = zeta.len();
    let active = active_terms(y, n);
    if active == 0 {
        return 0.0;
    }
    match method {
        Method::Naive => pairwise_sum(active, |k| zeta[k] * kernel.theta(y - k as f64)),
        Method::Abel => {
            let tail = lambda[n - 1] * kernel.theta(y - (n - 1) as f64);
            pairwise_sum(active.min(n - 1), |k| lambda[k] * kernel.big_theta(y - k as f64)) + tail
        }
    }
}

/// `Σ_{k=1}^{n} ζ_{-k} (θ(y+k) - θ(k))` for one low-frequency row, whose
/// coefficients `ζ_{-k}` are stored at `k - 1`.
pub fn lf_row_sum(kernel: &HaarKernel, zeta: &[f64], lambda: &[f64], y: f64, n: usize, method: Method) -> f64 {
    if n == 0 || y == 0.0 {
        return 0.0;
    }
    match method {
        Method::Naive => pairwise_sum(n, |i| {
            let k = (i + 1) as f64;
            zeta[i] * kernel.theta_increment(k, y)
        }),
        Method::Abel => {
            let last = n as f64;
            let head = lambda[n - 1] * kernel.theta_increment(last, y);
            // i = k - 2 for k = 2..=n
            head - pairwise_sum(n - 1, |i| {
                let k = (i + 2) as f64;
                lambda[i] * kernel.big_theta_increment(k, y)
            })
        }
    }
}

fn check_u(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("u must lie in [0, 1], got {u}")))
    }
}

/// Point evaluator bound to one pyramid.
#[derive(Debug, Clone)]
pub struct SeriesEvaluator<'a> {
    pyramid: &'a CoefficientPyramid,
    prefix: PrefixSums,
    params: KernelParams,
}

impl<'a> SeriesEvaluator<'a> {
    pub fn new(pyramid: &'a CoefficientPyramid) -> Result<Self> {
        Self::with_params(pyramid, KernelParams::new(pyramid.alpha())?)
    }

    pub fn with_params(pyramid: &'a CoefficientPyramid, params: KernelParams) -> Result<Self> {
        if params.alpha() != pyramid.alpha() {
            return Err(Error::Parameter(format!(
                "kernel alpha {} differs from pyramid alpha {}",
                params.alpha(),
                pyramid.alpha()
            )));
        }
        Ok(Self {
            pyramid,
            prefix: prefix_sums(pyramid),
            params,
        })
    }

    pub fn pyramid(&self) -> &CoefficientPyramid {
        self.pyramid
    }

    pub fn prefix(&self) -> &PrefixSums {
        &self.prefix
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn kernel(&self, v: f64) -> Result<HaarKernel> {
        self.params.kernel(v)
    }

    pub fn x1(&self, u: f64, v: f64, depth: usize, method: Method) -> Result<f64> {
        x1_with(self.pyramid, &self.prefix, &self.kernel(v)?, u, v, depth, method)
    }

    pub fn x2_plus(&self, u: f64, v: f64, depth: usize, method: Method) -> Result<f64> {
        x2_plus_with(self.pyramid, &self.prefix, &self.kernel(v)?, u, v, depth, method)
    }

    pub fn x2_minus(&self, u: f64, v: f64, depth: usize, method: Method) -> Result<f64> {
        x2_minus_with(self.pyramid, &self.prefix, &self.kernel(v)?, u, v, depth, method)
    }

    pub fn x2(&self, u: f64, v: f64, depth: usize, method: Method) -> Result<f64> {
        x2_with(self.pyramid, &self.prefix, &self.kernel(v)?, u, v, depth, method)
    }

    /// One component at `(u, v)`; `Total` is `X₁ + X₂`.
    pub fn component(&self, which: Component, u: f64, v: f64, depth: Truncation, method: Method) -> Result<f64> {
        let kernel = self.kernel(v)?;
        self.component_with(&kernel, which, u, v, depth, method)
    }

    pub(crate) fn component_with(
        &self,
        kernel: &HaarKernel,
        which: Component,
        u: f64,
        v: f64,
        depth: Truncation,
        method: Method,
    ) -> Result<f64> {
        let (pyr, pre) = (self.pyramid, &self.prefix);
        match which {
            Component::Hf => x1_with(pyr, pre, kernel, u, v, depth.hf, method),
            Component::LfPlus => x2_plus_with(pyr, pre, kernel, u, v, depth.lf, method),
            Component::LfMinus => x2_minus_with(pyr, pre, kernel, u, v, depth.lf, method),
            Component::Lf => x2_with(pyr, pre, kernel, u, v, depth.lf, method),
            Component::Total => Ok(x1_with(pyr, pre, kernel, u, v, depth.hf, method)?
                + x2_with(pyr, pre, kernel, u, v, depth.lf, method)?),
        }
    }
}

fn check_hf_depth(pyr: &CoefficientPyramid, depth: usize) -> Result<()> {
    if depth > pyr.hf_depth() {
        return Err(Error::Depth {
            what: "high-frequency rows",
            requested: depth,
            available: pyr.hf_depth(),
        });
    }
    Ok(())
}

fn check_lf_depth(pyr: &CoefficientPyramid, depth: usize) -> Result<()> {
    if depth > pyr.lf_depth() {
        return Err(Error::Depth {
            what: "low-frequency rows",
            requested: depth,
            available: pyr.lf_depth(),
        });
    }
    Ok(())
}

fn x1_with(
    pyr: &CoefficientPyramid,
    pre: &PrefixSums,
    kernel: &HaarKernel,
    u: f64,
    v: f64,
    depth: usize,
    method: Method,
) -> Result<f64> {
    check_u(u)?;
    check_hf_depth(pyr, depth)?;
    let q = kernel.q();
    let mut total = if u > 0.0 { u.powf(q) / q * pyr.z1() } else { 0.0 };
    for j in 0..depth {
        let y = u * (j as f64).exp2();
        let row = hf_row_sum(kernel, pyr.hf_row(j), pre.hf_row(j), y, method);
        total += (-(j as f64) * v).exp2() * row;
    }
    Ok(total)
}

fn x2_plus_with(
    pyr: &CoefficientPyramid,
    pre: &PrefixSums,
    kernel: &HaarKernel,
    u: f64,
    v: f64,
    depth: usize,
    method: Method,
) -> Result<f64> {
    check_u(u)?;
    check_lf_depth(pyr, depth)?;
    let mut total = 0.0;
    for j in 0..depth {
        let n = 1usize << (depth - j);
        let y = u * (j as f64).exp2();
        let row = lf_row_sum(kernel, pyr.lf_row(j as i32), pre.lf_row(j as i32), y, n, method);
        total += (-(j as f64) * v).exp2() * row;
    }
    Ok(total)
}

fn x2_minus_with(
    pyr: &CoefficientPyramid,
    pre: &PrefixSums,
    kernel: &HaarKernel,
    u: f64,
    v: f64,
    depth: usize,
    method: Method,
) -> Result<f64> {
    if depth < 2 {
        return Err(Error::Parameter(format!(
            "the negative-index low-frequency series needs depth ≥ 2, got {depth}"
        )));
    }
    check_u(u)?;
    check_lf_depth(pyr, depth)?;
    Ok(x2_minus_rows(pyr, pre, kernel, u, v, depth, method))
}

fn x2_minus_rows(
    pyr: &CoefficientPyramid,
    pre: &PrefixSums,
    kernel: &HaarKernel,
    u: f64,
    v: f64,
    depth: usize,
    method: Method,
) -> f64 {
    let mut total = 0.0;
    for j in 1..depth {
        let n = 1usize << (depth - j);
        let y = u * (-(j as f64)).exp2();
        let row = lf_row_sum(kernel, pyr.lf_row(-(j as i32)), pre.lf_row(-(j as i32)), y, n, method);
        total += (j as f64 * v).exp2() * row;
    }
    total
}

fn x2_with(
    pyr: &CoefficientPyramid,
    pre: &PrefixSums,
    kernel: &HaarKernel,
    u: f64,
    v: f64,
    depth: usize,
    method: Method,
) -> Result<f64> {
    let plus = x2_plus_with(pyr, pre, kernel, u, v, depth, method)?;
    Ok(plus + x2_minus_rows(pyr, pre, kernel, u, v, depth, method))
}

fn default_kernel(pyr: &CoefficientPyramid, v: f64) -> Result<HaarKernel> {
    KernelParams::new(pyr.alpha())?.kernel(v)
}

/// `X₁ᴶ(u, v)`.
pub fn x1_partial(
    u: f64,
    v: f64,
    pyr: &CoefficientPyramid,
    prefix: &PrefixSums,
    depth: usize,
    method: Method,
) -> Result<f64> {
    x1_with(pyr, prefix, &default_kernel(pyr, v)?, u, v, depth, method)
}

/// `X₂,₊ᴶ(u, v)`: the rows `j = 0, …, J-1` of `X₂ᴶ`.
pub fn x2_plus_partial(
    u: f64,
    v: f64,
    pyr: &CoefficientPyramid,
    prefix: &PrefixSums,
    depth: usize,
    method: Method,
) -> Result<f64> {
    x2_plus_with(pyr, prefix, &default_kernel(pyr, v)?, u, v, depth, method)
}

/// `X₂,₋ᴶ(u, v)`: the rows `j = 1-J, …, -1` of `X₂ᴶ`. Needs `J ≥ 2`.
pub fn x2_minus_partial(
    u: f64,
    v: f64,
    pyr: &CoefficientPyramid,
    prefix: &PrefixSums,
    depth: usize,
    method: Method,
) -> Result<f64> {
    x2_minus_with(pyr, prefix, &default_kernel(pyr, v)?, u, v, depth, method)
}

/// `X₂ᴶ(u, v) = X₂,₊ᴶ + X₂,₋ᴶ`; at `J ≤ 1` the negative rows are empty.
pub fn x2_partial(
    u: f64,
    v: f64,
    pyr: &CoefficientPyramid,
    prefix: &PrefixSums,
    depth: usize,
    method: Method,
) -> Result<f64> {
    x2_with(pyr, prefix, &default_kernel(pyr, v)?, u, v, depth, method)
}

/// A truncated series at fixed `(u, v)` as a linear functional of the
/// pyramid: `X = w_z1 · Z(1) + Σ w_{j,k} ζ_{j,k}`.
///
/// Weights are computed once, so Monte Carlo over many pyramids reduces to
/// dot products.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub z1: f64,
    /// High-frequency rows `j = 0, …, hf-1`.
    pub hf: Vec<Vec<f64>>,
    /// Low-frequency rows `j = 1-lf, …, lf-1`, each of length `2^(lf-|j|)`.
    pub lf: Vec<(i32, Vec<f64>)>,
}

impl LinearWeights {
    /// Weights of `which` at `(u, v)` and depth `depth` (which need not match
    /// any pyramid until [`apply`](Self::apply)).
    pub fn new(kernel: &HaarKernel, which: Component, u: f64, v: f64, depth: Truncation) -> Result<Self> {
        check_u(u)?;
        let mut w = LinearWeights {
            z1: 0.0,
            hf: Vec::new(),
            lf: Vec::new(),
        };
        let (hf, plus, minus) = match which {
            Component::Hf => (true, false, false),
            Component::LfPlus => (false, true, false),
            Component::LfMinus => {
                if depth.lf < 2 {
                    return Err(Error::Parameter(format!(
                        "the negative-index low-frequency series needs depth ≥ 2, got {}",
                        depth.lf
                    )));
                }
                (false, false, true)
            }
            Component::Lf => (false, true, true),
            Component::Total => (true, true, true),
        };
        if hf {
            w.z1 = u.powf(kernel.q()) / kernel.q();
            for j in 0..depth.hf {
                let y = u * (j as f64).exp2();
                let scale = (-(j as f64) * v).exp2();
                w.hf.push((0..1usize << j).map(|k| scale * kernel.theta(y - k as f64)).collect());
            }
        }
        let lf = depth.lf as i32;
        for j in (1 - lf)..lf {
            if (j >= 0 && !plus) || (j < 0 && !minus) {
                continue;
            }
            let n = 1usize << (depth.lf - j.unsigned_abs() as usize);
            let y = u * f64::from(j).exp2();
            let scale = (-f64::from(j) * v).exp2();
            let row = (1..=n)
                .map(|k| {
                    let k = k as f64;
                    scale * kernel.theta_increment(k, y)
                })
                .collect();
            w.lf.push((j, row));
        }
        Ok(w)
    }

    /// `Σ w · coefficients` against `pyr`, which must be at least as deep.
    pub fn apply(&self, pyr: &CoefficientPyramid) -> Result<f64> {
        check_hf_depth(pyr, self.hf.len())?;
        let mut total = self.z1 * pyr.z1();
        for (j, row) in self.hf.iter().enumerate() {
            total += dot(row, pyr.hf_row(j));
        }
        for (j, row) in &self.lf {
            let needed = (row.len().trailing_zeros() as usize) + j.unsigned_abs() as usize;
            check_lf_depth(pyr, needed)?;
            total += dot(row, &pyr.lf_row(*j)[..row.len()]);
        }
        Ok(total)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum(a.len(), |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::{generate_coefficients, CoefficientMode};

    fn pyramid() -> CoefficientPyramid {
        generate_coefficients(1.5, 8, 6, CoefficientMode::Consistent, 17).unwrap()
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_integers() {
        for n in [0, 1, 5, 1024, 1025, 5000] {
            let s = pairwise_sum(n, |i| i as f64);
            assert_eq!(s, (n * n.saturating_sub(1) / 2) as f64);
        }
    }

    #[test]
    fn active_term_count() {
        assert_eq!(active_terms(0.0, 8), 0);
        assert_eq!(active_terms(-1.0, 8), 0);
        assert_eq!(active_terms(0.3, 8), 1);
        assert_eq!(active_terms(3.0, 8), 3);
        assert_eq!(active_terms(3.5, 8), 4);
        assert_eq!(active_terms(100.0, 8), 8);
    }

    #[test]
    fn zero_depth_hf_is_the_leading_term() {
        let pyr = pyramid();
        let pre = prefix_sums(&pyr);
        let (u, v) = (0.6f64, 0.8f64);
        let q = 1.0 + v - 1.0 / 1.5;
        let expected = u.powf(q) / q * pyr.z1();
        assert_eq!(x1_partial(u, v, &pyr, &pre, 0, Method::Naive).unwrap(), expected);
        assert_eq!(x1_partial(u, v, &pyr, &pre, 0, Method::Abel).unwrap(), expected);
    }

    #[test]
    fn everything_vanishes_at_u_zero() {
        let pyr = pyramid();
        let eval = SeriesEvaluator::new(&pyr).unwrap();
        for method in [Method::Naive, Method::Abel] {
            for depth in 2..=6 {
                assert_eq!(eval.x1(0.0, 0.75, depth, method).unwrap(), 0.0);
                assert_eq!(eval.x2_plus(0.0, 0.75, depth, method).unwrap(), 0.0);
                assert_eq!(eval.x2_minus(0.0, 0.75, depth, method).unwrap(), 0.0);
                assert_eq!(eval.x2(0.0, 0.75, depth, method).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn depth_and_domain_errors() {
        let pyr = pyramid();
        let eval = SeriesEvaluator::new(&pyr).unwrap();
        assert!(matches!(eval.x1(0.5, 0.75, 9, Method::Abel), Err(Error::Depth { .. })));
        assert!(matches!(eval.x2(0.5, 0.75, 7, Method::Abel), Err(Error::Depth { .. })));
        assert!(matches!(eval.x2_minus(0.5, 0.75, 1, Method::Abel), Err(Error::Parameter(_))));
        assert!(eval.x1(1.5, 0.75, 2, Method::Abel).is_err());
        assert!(eval.x1(0.5, 0.6, 2, Method::Abel).is_err());
    }

    #[test]
    fn adding_a_row_adds_exactly_that_row() {
        let pyr = pyramid();
        let eval = SeriesEvaluator::new(&pyr).unwrap();
        let kernel = eval.kernel(0.7).unwrap();
        let u = 0.37;
        for depth in 0..8 {
            let a = eval.x1(u, 0.7, depth, Method::Naive).unwrap();
            let b = eval.x1(u, 0.7, depth + 1, Method::Naive).unwrap();
            let y = u * (depth as f64).exp2();
            let row = hf_row_sum(&kernel, pyr.hf_row(depth), eval.prefix().hf_row(depth), y, Method::Naive);
            assert_eq!(b, a + (-(depth as f64) * 0.7).exp2() * row);
        }
    }

    #[test]
    fn x2_is_plus_plus_minus() {
        let pyr = pyramid();
        let pre = prefix_sums(&pyr);
        for depth in 2..=6 {
            let p = x2_plus_partial(0.45, 0.8, &pyr, &pre, depth, Method::Naive).unwrap();
            let m = x2_minus_partial(0.45, 0.8, &pyr, &pre, depth, Method::Naive).unwrap();
            let t = x2_partial(0.45, 0.8, &pyr, &pre, depth, Method::Naive).unwrap();
            assert_eq!(t, p + m);
        }
        let p = x2_plus_partial(0.45, 0.8, &pyr, &pre, 1, Method::Naive).unwrap();
        assert_eq!(x2_partial(0.45, 0.8, &pyr, &pre, 1, Method::Naive).unwrap(), p);
    }

    #[test]
    fn linear_weights_reproduce_the_evaluators() {
        let pyr = pyramid();
        let eval = SeriesEvaluator::new(&pyr).unwrap();
        let kernel = eval.kernel(0.75).unwrap();
        let depth = Truncation::new(8, 6);
        for which in [Component::Hf, Component::LfPlus, Component::LfMinus, Component::Lf, Component::Total] {
            for &u in &[0.0, 0.3, 1.0] {
                let w = LinearWeights::new(&kernel, which, u, 0.75, depth).unwrap();
                let direct = eval.component(which, u, 0.75, depth, Method::Naive).unwrap();
                let via = w.apply(&pyr).unwrap();
                assert!((direct - via).abs() <= 1e-12 * (1.0 + direct.abs()), "{which:?} {u}");
            }
        }
    }

    #[test]
    fn method_strings() {
        assert_eq!("abel".parse::<Method>().unwrap(), Method::Abel);
        assert_eq!("naive".parse::<Method>().unwrap(), Method::Naive);
        assert!("fast".parse::<Method>().is_err());
        assert_eq!(Method::default(), Method::Abel);
    }
}
