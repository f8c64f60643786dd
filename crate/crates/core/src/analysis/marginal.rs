use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{estimate_scale, x1_theoretical_scale, x2_theoretical_scale};
use crate::error::{Error, Result};
use crate::kernels::KernelParams;
use crate::series::{Component, LinearWeights, Truncation};
use crate::stable::{derive_seed, CoefficientMode, PyramidSpec};

/// A Monte Carlo check of the marginal law of `X₁ᴶ(u,v)` or `X₂ᴶ(u,v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalSpec {
    /// `Hf` or `Lf`.
    pub which: Component,
    pub alpha: f64,
    pub points: Vec<(f64, f64)>,
    pub depth: usize,
    pub replicates: usize,
    pub mode: CoefficientMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalPoint {
    pub u: f64,
    pub v: f64,
    /// Scale estimated from the replicates.
    pub estimate: f64,
    /// Scale of the untruncated integral.
    pub theoretical: f64,
    /// Exact scale of the truncated series under the chosen mode.
    pub truncated: f64,
}

impl MarginalPoint {
    pub fn relative_error(&self) -> f64 {
        (self.estimate - self.theoretical).abs() / self.theoretical
    }

    /// `truncated / theoretical - 1`: the deterministic truncation bias.
    pub fn truncation_bias(&self) -> f64 {
        self.truncated / self.theoretical - 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub spec: MarginalSpec,
    pub points: Vec<MarginalPoint>,
}

impl MarginalReport {
    pub fn max_relative_error(&self) -> f64 {
        self.points.iter().map(MarginalPoint::relative_error).fold(0.0, f64::max)
    }

    /// `u,v,estimate,theoretical,truncated,relative_error` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,estimate,theoretical,truncated,relative_error\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.u,
                p.v,
                p.estimate,
                p.theoretical,
                p.truncated,
                p.relative_error()
            );
        }
        out
    }
}

fn truncation(which: Component, depth: usize) -> Result<Truncation> {
    match which {
        Component::Hf => Ok(Truncation::new(depth, 0)),
        Component::Lf => Ok(Truncation::new(0, depth)),
        other => Err(Error::Parameter(format!(
            "marginal studies cover `hf` and `lf`, not `{}`",
            other.as_str()
        ))),
    }
}

/// Draws `replicates` pyramids, evaluates the series at every point and
/// compares the estimated scale with the theoretical one.
pub fn marginal_scale_study(spec: &MarginalSpec) -> Result<MarginalReport> {
    let depth = truncation(spec.which, spec.depth)?;
    let params = KernelParams::new(spec.alpha)?;
    let weights = spec
        .points
        .iter()
        .map(|&(u, v)| LinearWeights::new(&params.kernel(v)?, spec.which, u, v, depth))
        .collect::<Result<Vec<_>>>()?;
    let samples = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let pyr = PyramidSpec::new(spec.alpha, depth.hf, depth.lf, spec.mode, derive_seed(spec.seed, r))
                .generate()?;
            weights.iter().map(|w| w.apply(&pyr)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let points = spec
        .points
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| {
            let column: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let theoretical = match spec.which {
                Component::Hf => x1_theoretical_scale(u, v, spec.alpha)?,
                _ => x2_theoretical_scale(u, v, spec.alpha)?,
            };
            Ok(MarginalPoint {
                u,
                v,
                estimate: estimate_scale(&column, spec.alpha)?,
                theoretical,
                truncated: exact_marginal_scale(spec.alpha, spec.which, u, v, spec.depth, spec.mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarginalReport {
        spec: spec.clone(),
        points,
    })
}

/// Exact SαS scale of the truncated series at `(u, v)`.
///
/// Independent mode: `(|w_z1|^α + Σ |w|^α)^{1/α}` over the coefficient
/// weights. Consistent mode: the series is a linear functional of the Lévy
/// path at default resolution, so it is pushed down to the path increments
/// and the scale is `(Σ |c_gap|^α · gap)^{1/α}`.
pub fn exact_marginal_scale(
    alpha: f64,
    which: Component,
    u: f64,
    v: f64,
    depth: usize,
    mode: CoefficientMode,
) -> Result<f64> {
    let trunc = truncation(which, depth)?;
    let kernel = KernelParams::new(alpha)?.kernel(v)?;
    let w = LinearWeights::new(&kernel, which, u, v, trunc)?;
    match mode {
        CoefficientMode::Independent => {
            let total = w.z1.abs().powf(alpha)
                + w.hf.iter().flatten().map(|x| x.abs().powf(alpha)).sum::<f64>()
                + w.lf.iter().flat_map(|(_, r)| r).map(|x| x.abs().powf(alpha)).sum::<f64>();
            Ok(total.powf(1.0 / alpha))
        }
        CoefficientMode::Consistent => {
            let level = match which {
                Component::Hf => trunc.hf,
                _ => trunc.lf,
            };
            let mut ticks: BTreeMap<i64, f64> = BTreeMap::new();
            *ticks.entry(1i64 << level).or_default() += w.z1;
            let mut add_row = |j: i32, k: i64, weight: f64| {
                let unit = 1i64 << (level as i64 - i64::from(j) - 1);
                let c = -weight * (f64::from(j) / alpha).exp2();
                *ticks.entry(2 * k * unit).or_default() += c;
                *ticks.entry((2 * k + 1) * unit).or_default() -= 2.0 * c;
                *ticks.entry((2 * k + 2) * unit).or_default() += c;
            };
            for (j, row) in w.hf.iter().enumerate() {
                for (k, &x) in row.iter().enumerate() {
                    add_row(j as i32, k as i64, x);
                }
            }
            for (j, row) in &w.lf {
                for (i, &x) in row.iter().enumerate() {
                    add_row(*j, -(i as i64 + 1), x);
                }
            }
            Ok(levy_functional_scale(&ticks, level as u32, alpha))
        }
    }
}

/// Scale of `Σ_t W_t Z(t·2^-level)` for a Lévy process with `Z(0) = 0`.
fn levy_functional_scale(ticks: &BTreeMap<i64, f64>, level: u32, alpha: f64) -> f64 {
    let step = (-f64::from(level)).exp2();
    let mut total = 0.0;
    // Positive side: the increment over (a, b] enters every Z(t), t ≥ b.
    let positive: Vec<(i64, f64)> = ticks.range(1..).map(|(&t, &w)| (t, w)).collect();
    let mut suffix = 0.0;
    for i in (0..positive.len()).rev() {
        suffix += positive[i].1;
        let a = if i == 0 { 0 } else { positive[i - 1].0 };
        let gap = (positive[i].0 - a) as f64 * step;
        total += suffix.abs().powf(alpha) * gap;
    }
    // Negative side: Z(t) = -(increments over (t, 0]).
    let negative: Vec<(i64, f64)> = ticks.range(..0).map(|(&t, &w)| (t, w)).collect();
    let mut prefix = 0.0;
    for i in 0..negative.len() {
        prefix += negative[i].1;
        let b = if i + 1 == negative.len() { 0 } else { negative[i + 1].0 };
        let gap = (b - negative[i].0) as f64 * step;
        total += prefix.abs().powf(alpha) * gap;
    }
    total.powf(1.0 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn functional_scale_of_single_values() {
        // Z(1) at level 3 has scale 1; Z(-2) has scale 2^{1/α}.
        let mut ticks = BTreeMap::new();
        ticks.insert(8, 1.0);
        assert!((levy_functional_scale(&ticks, 3, 1.5) - 1.0).abs() < 1e-15);
        let mut ticks = BTreeMap::new();
        ticks.insert(-16, 1.0);
        assert!((levy_functional_scale(&ticks, 3, 1.5) - 2f64.powf(1.0 / 1.5)).abs() < 1e-15);
        // Z(1) - Z(1/2) has scale (1/2)^{1/α}.
        let mut ticks = BTreeMap::new();
        ticks.insert(8, 1.0);
        ticks.insert(4, -1.0);
        assert!((levy_functional_scale(&ticks, 3, 1.5) - 0.5f64.powf(1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn consistent_hf_scale_approaches_theory() {
        let theory = x1_theoretical_scale(0.5, 0.8, 1.5).unwrap();
        let exact = exact_marginal_scale(1.5, Component::Hf, 0.5, 0.8, 10, CoefficientMode::Consistent).unwrap();
        assert!((exact / theory - 1.0).abs() < 1e-3, "{exact} vs {theory}");
    }
}
