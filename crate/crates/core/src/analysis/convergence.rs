use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{HaarKernel, KernelParams};
use crate::series::{hf_row_on_dyadic_grid, linspace, Component, LinearWeights, Truncation};
use crate::stable::{derive_seed, CoefficientMode, PyramidSpec};

/// Minimum number of replicates for a rate fit.
pub const MIN_REPLICATES: usize = 8;

/// Parameters of a truncation-rate study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSpec {
    /// `Hf` or `Lf`.
    pub which: Component,
    pub alpha: f64,
    /// `[a, b]`; `a == b` pins `v`.
    pub v_range: (f64, f64),
    /// Number of `v` values spread over `v_range` (1 when pinned).
    pub v_points: usize,
    pub j_list: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// `Hf`: the sup is taken over `u = i/2^level`; defaults to
    /// `max(J) + 2`, two levels finer than the finest row compared.
    pub hf_grid_level: Option<usize>,
    /// `Lf`: number of equispaced `u` points; default 257.
    pub lf_grid_points: usize,
}

impl ConvergenceSpec {
    pub fn new(which: Component, alpha: f64, v: f64, j_list: Vec<usize>, replicates: usize, seed: u64) -> Self {
        Self {
            which,
            alpha,
            v_range: (v, v),
            v_points: 1,
            j_list,
            replicates,
            seed,
            hf_grid_level: None,
            lf_grid_points: 257,
        }
    }

    fn v_grid(&self) -> Vec<f64> {
        let (a, b) = self.v_range;
        if a == b {
            vec![a]
        } else {
            linspace(a, b, self.v_points.max(2))
        }
    }
}

/// Consecutive-depth sup norms `‖Xᴶ⁺¹ - Xᴶ‖` and their fitted log₂ slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub which: Component,
    pub alpha: f64,
    pub v_range: (f64, f64),
    pub j_list: Vec<usize>,
    /// `norms[i][r]` for depth `j_list[i]` and replicate `r`.
    pub norms: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// Least-squares slope of `log₂ median` against `J`; `None` when it is
    /// undefined.
    pub fitted_slope: Option<f64>,
    /// `-(a - 1/α)` for `Hf`, `-(1 - b)` for `Lf`.
    pub theoretical_slope: f64,
    pub grid: String,
    pub seeds: Vec<u64>,
    pub flags: Vec<String>,
}

impl ConvergenceReport {
    /// One row per `(J, replicate)`: `J,replicate,seed,norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("J,replicate,seed,norm\n");
        for (i, j) in self.j_list.iter().enumerate() {
            for (r, norm) in self.norms[i].iter().enumerate() {
                let _ = writeln!(out, "{j},{r},{},{norm}", self.seeds[r]);
            }
        }
        out
    }

    /// True when the fitted slope exists and lies within `tol` of theory.
    pub fn passes(&self, tol: f64) -> bool {
        self.fitted_slope
            .is_some_and(|s| (s - self.theoretical_slope).abs() <= tol)
    }

    pub fn summary(&self, tol: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "component: {}", self.which.as_str());
        let _ = writeln!(out, "alpha: {}", self.alpha);
        let _ = writeln!(out, "v range: [{}, {}]", self.v_range.0, self.v_range.1);
        let _ = writeln!(out, "grid: {}", self.grid);
        let _ = writeln!(out, "replicates: {}", self.seeds.len());
        for (j, m) in self.j_list.iter().zip(&self.medians) {
            let _ = writeln!(out, "J = {j:>3}: median norm {m:.6e}");
        }
        match self.fitted_slope {
            Some(s) => {
                let _ = writeln!(out, "fitted slope: {s:.4}");
            }
            None => {
                let _ = writeln!(out, "fitted slope: undefined");
            }
        }
        let _ = writeln!(out, "theoretical slope: {:.4}", self.theoretical_slope);
        let _ = writeln!(
            out,
            "tolerance: ±{tol} -> {}",
            if self.passes(tol) { "PASS" } else { "FAIL" }
        );
        for flag in &self.flags {
            let _ = writeln!(out, "flag: {flag}");
        }
        out
    }
}

/// Median of a non-empty slice; the mean of the two middle values for even
/// lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Measures `‖Xᴶ⁺¹ - Xᴶ‖` over the grid for every `J` in `j_list`, on
/// consistent-mode pyramids (one per replicate, seeds derived from `seed`),
/// and fits the log₂ slope of the per-`J` medians.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    if spec.replicates < MIN_REPLICATES {
        return Err(Error::Statistics(format!(
            "a rate study needs at least {MIN_REPLICATES} replicates, got {}",
            spec.replicates
        )));
    }
    if spec.j_list.is_empty() || spec.j_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("J list must be non-empty and strictly increasing".into()));
    }
    let params = KernelParams::new(spec.alpha)?;
    let v_grid = spec.v_grid();
    let kernels = v_grid.iter().map(|&v| params.kernel(v)).collect::<Result<Vec<_>>>()?;
    let seeds: Vec<u64> = (0..spec.replicates as u64).map(|r| derive_seed(spec.seed, r)).collect();
    let j_max = *spec.j_list.last().expect("non-empty");
    let (a, b) = (v_grid[0], *v_grid.last().expect("non-empty"));

    let (per_replicate, grid, theoretical) = match spec.which {
        Component::Hf => {
            let level = spec.hf_grid_level.unwrap_or(j_max + 2);
            if level < j_max {
                return Err(Error::Parameter(format!("grid level {level} is coarser than row {j_max}")));
            }
            let norms = seeds
                .par_iter()
                .map(|&s| hf_norms(spec, &kernels, &v_grid, s, level))
                .collect::<Result<Vec<_>>>()?;
            let grid = format!(
                "u = i/2^{level} ({} points) x {} v values",
                (1usize << level) + 1,
                v_grid.len()
            );
            (norms, grid, -(a - 1.0 / spec.alpha))
        }
        Component::Lf => {
            let u_grid = linspace(0.0, 1.0, spec.lf_grid_points.max(2));
            let weights = lf_weights(&kernels, &v_grid, &u_grid, &spec.j_list)?;
            let norms = seeds
                .par_iter()
                .map(|&s| lf_norms(spec, &weights, s))
                .collect::<Result<Vec<_>>>()?;
            let grid = format!("{} equispaced u in [0, 1] x {} v values", u_grid.len(), v_grid.len());
            (norms, grid, -(1.0 - b))
        }
        other => {
            return Err(Error::Parameter(format!(
                "rate studies cover `hf` and `lf`, not `{}`",
                other.as_str()
            )))
        }
    };

    let norms: Vec<Vec<f64>> = (0..spec.j_list.len())
        .map(|i| per_replicate.iter().map(|r| r[i]).collect())
        .collect();
    let medians: Vec<f64> = norms.iter().map(|n| median(n)).collect();
    let mut flags = Vec::new();
    let fitted_slope = if spec.j_list.len() < 2 {
        flags.push("single depth: no slope can be fitted".to_string());
        None
    } else if medians.iter().any(|m| !(*m > 0.0)) {
        flags.push("a median norm is zero: log-slope undefined".to_string());
        None
    } else {
        let x: Vec<f64> = spec.j_list.iter().map(|&j| j as f64).collect();
        let y: Vec<f64> = medians.iter().map(|m| m.log2()).collect();
        Some(least_squares_slope(&x, &y))
    };
    Ok(ConvergenceReport {
        which: spec.which,
        alpha: spec.alpha,
        v_range: (a, b),
        j_list: spec.j_list.clone(),
        norms,
        medians,
        fitted_slope,
        theoretical_slope: theoretical,
        grid,
        seeds,
        flags,
    })
}

/// `‖X₁ᴶ⁺¹ - X₁ᴶ‖ = sup_u |2^{-Jv} Σ_k ζ_{J,k} θ(2^J u - k)|`.
fn hf_norms(spec: &ConvergenceSpec, kernels: &[HaarKernel], v_grid: &[f64], seed: u64, level: usize) -> Result<Vec<f64>> {
    let j_max = *spec.j_list.last().expect("non-empty");
    let pyr = PyramidSpec::new(spec.alpha, j_max + 1, 0, CoefficientMode::Consistent, seed).generate()?;
    spec.j_list
        .iter()
        .map(|&j| {
            let mut sup = 0.0f64;
            for (kernel, &v) in kernels.iter().zip(v_grid) {
                let row = hf_row_on_dyadic_grid(kernel, pyr.hf_row(j), level)?;
                let scale = (-(j as f64) * v).exp2();
                sup = row.iter().fold(sup, |m, x| m.max((scale * x).abs()));
            }
            Ok(sup)
        })
        .collect()
}

/// Weights of `X₂ᴶ` for every depth needed, per grid point.
struct LfWeights {
    depths: Vec<usize>,
    /// `by_depth[d][point]`.
    by_depth: Vec<Vec<LinearWeights>>,
}

fn lf_weights(kernels: &[HaarKernel], v_grid: &[f64], u_grid: &[f64], j_list: &[usize]) -> Result<LfWeights> {
    let mut depths: Vec<usize> = j_list.iter().flat_map(|&j| [j, j + 1]).collect();
    depths.sort_unstable();
    depths.dedup();
    let by_depth = depths
        .iter()
        .map(|&d| {
            u_grid
                .par_iter()
                .flat_map_iter(|&u| {
                    kernels
                        .iter()
                        .zip(v_grid)
                        .map(move |(k, &v)| LinearWeights::new(k, Component::Lf, u, v, Truncation::new(0, d)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LfWeights { depths, by_depth })
}

fn lf_norms(spec: &ConvergenceSpec, weights: &LfWeights, seed: u64) -> Result<Vec<f64>> {
    let deepest = *weights.depths.last().expect("non-empty");
    let pyr = PyramidSpec::new(spec.alpha, 0, deepest, CoefficientMode::Consistent, seed).generate()?;
    let values = weights
        .by_depth
        .iter()
        .map(|ws| ws.iter().map(|w| w.apply(&pyr)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let index = |d: usize| weights.depths.binary_search(&d).expect("depth listed");
    Ok(spec
        .j_list
        .iter()
        .map(|&j| {
            let (lo, hi) = (&values[index(j)], &values[index(j + 1)]);
            lo.iter().zip(hi).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max)
        })
        .collect())
}
