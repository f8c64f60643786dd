use serde::Serialize;

use crate::error::{Error, Result};
use crate::stable::{derive_seed, generate_coefficients, prefix_sums, CoefficientMode, PrefixSums};

/// Growth envelope `(1+n)^{1/α} · ln(3+n)^{1/α+η}`.
fn envelope(n: f64, alpha: f64, eta: f64) -> f64 {
    (1.0 + n).powf(1.0 / alpha) * (3.0 + n).ln().powf(1.0 / alpha + eta)
}

/// `sup_k |λ_k| / (env(j) env(k))` for one prefix-sum row whose first entry
/// has index `first_k`.
pub fn normalized_row_sup(row: &[f64], j: usize, first_k: usize, alpha: f64, eta: f64) -> f64 {
    let ej = envelope(j as f64, alpha, eta);
    row.iter()
        .enumerate()
        .map(|(i, l)| l.abs() / (ej * envelope((i + first_k) as f64, alpha, eta)))
        .fold(0.0, f64::max)
}

/// Where the normalized sup of the prefix sums is attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub eta: f64,
    pub normalized_sup: f64,
    /// `true` for a high-frequency row.
    pub high_frequency: bool,
    pub row: i32,
    pub hf_sup: f64,
    pub lf_sup: f64,
}

/// Empirical normalized sup of `|λ_{j,k}|` over all rows: a diagnostic for
/// the almost-sure growth envelope of the prefix sums, not an assertion.
pub fn coefficient_growth_diagnostic(prefix: &PrefixSums, alpha: f64, eta: f64) -> GrowthReport {
    let mut best = (0.0, true, 0i32);
    let mut hf_sup = 0.0f64;
    for (j, row) in prefix.hf.iter().enumerate() {
        let s = normalized_row_sup(row, j, 0, alpha, eta);
        hf_sup = hf_sup.max(s);
        if s > best.0 {
            best = (s, true, j as i32);
        }
    }
    let mut lf_sup = 0.0f64;
    let depth = prefix.lf_depth as i32;
    for (row, j) in prefix.lf.iter().zip(1 - depth..depth) {
        let s = normalized_row_sup(row, j.unsigned_abs() as usize, 1, alpha, eta);
        lf_sup = lf_sup.max(s);
        if s > best.0 {
            best = (s, false, j);
        }
    }
    GrowthReport {
        eta,
        normalized_sup: best.0,
        high_frequency: best.1,
        row: best.2,
        hf_sup,
        lf_sup,
    }
}

/// Normalized sups over many seeds and whether their running maximum settled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthStudy {
    pub sups: Vec<f64>,
    pub first_half_max: f64,
    pub overall_max: f64,
    /// Soft alarm: the second half of the seeds more than doubled the
    /// running maximum. Heavy tails make this possible without any defect.
    pub alarm: bool,
}

pub fn growth_across_seeds(
    alpha: f64,
    hf_depth: usize,
    lf_depth: usize,
    eta: f64,
    seeds: usize,
    seed: u64,
) -> Result<GrowthStudy> {
    if seeds < 2 {
        return Err(Error::Statistics("a growth study needs at least 2 seeds".into()));
    }
    let sups = (0..seeds as u64)
        .map(|r| {
            let pyr = generate_coefficients(alpha, hf_depth, lf_depth, CoefficientMode::Consistent, derive_seed(seed, r))?;
            Ok(coefficient_growth_diagnostic(&prefix_sums(&pyr), alpha, eta).normalized_sup)
        })
        .collect::<Result<Vec<_>>>()?;
    let first_half_max = sups[..seeds / 2].iter().copied().fold(0.0, f64::max);
    let overall_max = sups.iter().copied().fold(0.0, f64::max);
    Ok(GrowthStudy {
        alarm: overall_max > 2.0 * first_half_max,
        sups,
        first_half_max,
        overall_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Statistics("KS test needs two non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::generate_coefficients;

    #[test]
    fn zero_prefix_sums_give_zero() {
        let mut pyr = generate_coefficients(1.5, 4, 3, CoefficientMode::Independent, 1).unwrap();
        pyr.hf.iter_mut().flatten().for_each(|x| *x = 0.0);
        pyr.lf.iter_mut().flatten().for_each(|x| *x = 0.0);
        let r = coefficient_growth_diagnostic(&prefix_sums(&pyr), 1.5, 0.5);
        assert_eq!(r.normalized_sup, 0.0);
    }

    #[test]
    fn larger_eta_never_increases_the_ratio() {
        let pyr = generate_coefficients(1.5, 8, 5, CoefficientMode::Consistent, 3).unwrap();
        let pre = prefix_sums(&pyr);
        let lo = coefficient_growth_diagnostic(&pre, 1.5, 0.1);
        let hi = coefficient_growth_diagnostic(&pre, 1.5, 0.5);
        assert!(hi.normalized_sup <= lo.normalized_sup);
        for j in 0..8 {
            assert!(normalized_row_sup(pre.hf_row(j), j, 0, 1.5, 0.5) <= normalized_row_sup(pre.hf_row(j), j, 0, 1.5, 0.1));
        }
    }

    #[test]
    fn ks_identical_and_shifted_samples() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let b: Vec<f64> = (250..750).map(|i| i as f64 / 500.0).collect();
        let shifted = ks_two_sample(&a, &b).unwrap();
        assert!((shifted.statistic - 0.5).abs() < 1e-12);
        assert!(shifted.p_value < 1e-10);
    }

    #[test]
    fn growth_study_shapes() {
        let s = growth_across_seeds(1.5, 5, 3, 0.5, 6, 0).unwrap();
        assert_eq!(s.sups.len(), 6);
        assert!(s.overall_max >= s.first_half_max);
    }
}
