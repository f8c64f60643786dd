use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Method, SeriesEvaluator, Truncation};
use crate::error::{Error, Result};

/// Which part of the field a sample holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    /// `X₁ᴶ`.
    Hf,
    /// Rows `j ≥ 0` of `X₂ᴶ`.
    LfPlus,
    /// Rows `j < 0` of `X₂ᴶ`.
    LfMinus,
    /// `X₂ᴶ`.
    Lf,
    /// `X₁ᴶ + X₂ᴶ`.
    Total,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Hf => "hf",
            Component::LfPlus => "lf-plus",
            Component::LfMinus => "lf-minus",
            Component::Lf => "lf",
            Component::Total => "total",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hf" => Ok(Component::Hf),
            "lf-plus" | "lf_plus" => Ok(Component::LfPlus),
            "lf-minus" | "lf_minus" => Ok(Component::LfMinus),
            "lf" => Ok(Component::Lf),
            "total" => Ok(Component::Total),
            other => Err(Error::Parameter(format!("unknown field component `{other}`"))),
        }
    }
}

/// A rectangular `(u, v)` grid inside `[0,1] × [a,b]`, `1/α < a ≤ b < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalDomain {
    u_grid: Vec<f64>,
    v_grid: Vec<f64>,
    a: f64,
    b: f64,
}

impl EvalDomain {
    /// `a` and `b` are the extremes of `v_grid`.
    pub fn new(u_grid: Vec<f64>, v_grid: Vec<f64>, alpha: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if u_grid.is_empty() || v_grid.is_empty() {
            problems.push("u and v grids must be non-empty".to_string());
        }
        if let Some(u) = u_grid.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            problems.push(format!("u value {u} outside [0, 1]"));
        }
        let a = v_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let b = v_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !v_grid.is_empty() && !(a > 1.0 / alpha && b < 1.0) {
            problems.push(format!(
                "v range [{a}, {b}] must lie inside (1/alpha, 1) = ({}, 1)",
                1.0 / alpha
            ));
        }
        if !problems.is_empty() {
            return Err(Error::Constraints(problems));
        }
        Ok(Self { u_grid, v_grid, a, b })
    }

    /// `nu` equispaced `u` in `[0, 1]` and `nv` equispaced `v` in `[a, b]`.
    pub fn uniform(nu: usize, nv: usize, a: f64, b: f64, alpha: f64) -> Result<Self> {
        Self::new(linspace(0.0, 1.0, nu), linspace(a, b, nv), alpha)
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn v_grid(&self) -> &[f64] {
        &self.v_grid
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u_grid.len(), self.v_grid.len())
    }
}

/// `n` equispaced points from `lo` to `hi` inclusive, computed as
/// `lo + i·(hi-lo)/(n-1)` so dyadic steps are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Field values on an [`EvalDomain`], `values[i·nv + l]` at
/// `(u_grid[i], v_grid[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub domain: EvalDomain,
    pub values: Vec<f64>,
    pub depth: Truncation,
    pub which: Component,
    pub method: Method,
}

impl FieldSample {
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.values[i * self.domain.v_grid.len() + l]
    }

    /// Values at `v_grid[l]` along `u`.
    pub fn column(&self, l: usize) -> Vec<f64> {
        let nv = self.domain.v_grid.len();
        self.values.iter().skip(l).step_by(nv).copied().collect()
    }

    /// CSV: an optional `# ` comment line, then a header `u\v,v_0,v_1,…`,
    /// then one row per `u`. Floats use Rust's shortest round-trip form.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        out.push_str("u\\v");
        for v in &self.domain.v_grid {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
        let nv = self.domain.v_grid.len();
        for (i, u) in self.domain.u_grid.iter().enumerate() {
            let _ = write!(out, "{u}");
            for x in &self.values[i * nv..(i + 1) * nv] {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

fn evaluate_row(
    eval: &SeriesEvaluator<'_>,
    kernels: &[crate::kernels::HaarKernel],
    domain: &EvalDomain,
    u: f64,
    depth: Truncation,
    which: Component,
    method: Method,
) -> Result<Vec<f64>> {
    kernels
        .iter()
        .zip(&domain.v_grid)
        .map(|(k, &v)| eval.component_with(k, which, u, v, depth, method))
        .collect()
}

fn prepare(
    eval: &SeriesEvaluator<'_>,
    domain: &EvalDomain,
) -> Result<Vec<crate::kernels::HaarKernel>> {
    domain.v_grid.iter().map(|&v| eval.kernel(v)).collect()
}

/// Evaluates `which` over the whole domain, rows of `u` in parallel. Each
/// cell is computed independently, so the result does not depend on the
/// scheduling.
pub fn evaluate_field(
    domain: &EvalDomain,
    eval: &SeriesEvaluator<'_>,
    depth: Truncation,
    which: Component,
    method: Method,
) -> Result<FieldSample> {
    let kernels = prepare(eval, domain)?;
    let rows = domain
        .u_grid
        .par_iter()
        .map(|&u| evaluate_row(eval, &kernels, domain, u, depth, which, method))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSample {
        domain: domain.clone(),
        values: rows.concat(),
        depth,
        which,
        method,
    })
}

/// Single-threaded [`evaluate_field`].
pub fn evaluate_field_serial(
    domain: &EvalDomain,
    eval: &SeriesEvaluator<'_>,
    depth: Truncation,
    which: Component,
    method: Method,
) -> Result<FieldSample> {
    let kernels = prepare(eval, domain)?;
    let rows = domain
        .u_grid
        .iter()
        .map(|&u| evaluate_row(eval, &kernels, domain, u, depth, which, method))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSample {
        domain: domain.clone(),
        values: rows.concat(),
        depth,
        which,
        method,
    })
}
