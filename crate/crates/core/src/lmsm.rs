//! Multifractional paths `Y(t) = X(t, H(t))` and the Hurst functions that
//! drive them.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelParams, DEFAULT_SWITCH_X};
use crate::series::{linspace, Component, Method, SeriesEvaluator, Truncation};
use crate::stable::{CoefficientMode, CoefficientPyramid, PyramidSpec};

/// Margin kept between `H` and the open interval `(1/α, 1)`.
pub const BOUND_MARGIN: f64 = 1e-6;

/// Number of subintervals used to sample `H` on `[0, 1]`.
pub const HURST_SAMPLES_LOG2: u32 = 12;

/// A Hurst function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HurstFunction {
    /// `H(t) = value`.
    Constant { value: f64 },
    /// `H(t) = intercept + slope·t`.
    Linear { intercept: f64, slope: f64 },
    /// `H(t) = offset + amplitude·sin(2π·cycles·t)`.
    Sine { amplitude: f64, cycles: f64, offset: f64 },
    /// `H(t) = base + height / (1 + exp(steepness·(t - midpoint)))`.
    Logistic {
        base: f64,
        height: f64,
        steepness: f64,
        midpoint: f64,
    },
    /// Piecewise linear through `(t, H)` knots, constant beyond the ends.
    Table { knots: Vec<(f64, f64)> },
}

impl HurstFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HurstFunction::Constant { value } => *value,
            HurstFunction::Linear { intercept, slope } => intercept + slope * t,
            HurstFunction::Sine {
                amplitude,
                cycles,
                offset,
            } => amplitude * (2.0 * PI * cycles * t).sin() + offset,
            HurstFunction::Logistic {
                base,
                height,
                steepness,
                midpoint,
            } => base + height / (1.0 + (steepness * (t - midpoint)).exp()),
            HurstFunction::Table { knots } => interpolate(knots, t),
        }
    }

    /// Minimum and maximum over `2^12 + 1` equispaced points of `[0, 1]`.
    pub fn sampled_range(&self) -> (f64, f64) {
        let n = 1usize << HURST_SAMPLES_LOG2;
        (0..=n)
            .map(|i| self.eval(i as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
                (lo.min(h), hi.max(h))
            })
    }

    /// The `kind:p1,p2,…` form accepted by [`FromStr`](std::str::FromStr).
    pub fn spec_string(&self) -> String {
        self.to_string()
    }

    fn check(self) -> Result<Self> {
        if let HurstFunction::Table { knots } = &self {
            if knots.is_empty() {
                return Err(Error::Parameter("a table Hurst function needs at least one knot".into()));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Parameter("table knots must have strictly increasing t".into()));
            }
            if knots.iter().any(|&(t, h)| !(0.0..=1.0).contains(&t) || !h.is_finite()) {
                return Err(Error::Parameter("table knots need t in [0, 1] and finite H".into()));
            }
        }
        Ok(self)
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let idx = knots.partition_point(|&(tk, _)| tk <= t);
    let (t0, h0) = knots[idx - 1];
    let (t1, h1) = knots[idx];
    h0 + (h1 - h0) * (t - t0) / (t1 - t0)
}

impl fmt::Display for HurstFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HurstFunction::Constant { value } => write!(f, "constant:{value}"),
            HurstFunction::Linear { intercept, slope } => write!(f, "linear:{intercept},{slope}"),
            HurstFunction::Sine {
                amplitude,
                cycles,
                offset,
            } => write!(f, "sine:{amplitude},{cycles},{offset}"),
            HurstFunction::Logistic {
                base,
                height,
                steepness,
                midpoint,
            } => write!(f, "logistic:{base},{height},{steepness},{midpoint}"),
            HurstFunction::Table { knots } => {
                write!(f, "table:")?;
                for (i, (t, h)) in knots.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{t},{h}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for HurstFunction {
    type Err = Error;

    /// `constant:0.75`, `linear[:intercept,slope]`,
    /// `sine[:amplitude,cycles,offset]`,
    /// `logistic[:base,height,steepness,midpoint]`, `table:t,h;t,h;…`.
    /// Omitted parameters take the preset defaults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        if name == "table" {
            let args = args.ok_or_else(|| Error::Parameter("table needs knots `t,h;t,h;…`".into()))?;
            let knots = args
                .split(';')
                .map(|pair| {
                    let nums = parse_numbers(pair)?;
                    match nums.as_slice() {
                        [t, h] => Ok((*t, *h)),
                        _ => Err(Error::Parameter(format!("table knot `{pair}` is not `t,h`"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return HurstFunction::Table { knots }.check();
        }
        let params = match args {
            Some(a) if !a.is_empty() => parse_numbers(a)?,
            _ => Vec::new(),
        };
        hurst_preset(name, &params)
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("`{}` is not a number", x.trim())))
        })
        .collect()
}

/// Builds a named Hurst function. Parameters, when given, must all be given:
///
/// * `constant`: `value` (required)
/// * `linear`: `intercept, slope`, default `0.9, -0.2`
/// * `sine`: `amplitude, cycles, offset`, default `0.2, 2, 0.8`
/// * `logistic`: `base, height, steepness, midpoint`, default `0.65, 0.25, 100, 0.5`
/// * `table`: flattened knots `t0, h0, t1, h1, …`
pub fn hurst_preset(name: &str, params: &[f64]) -> Result<HurstFunction> {
    let arity = |expected: usize| -> Result<()> {
        if params.is_empty() || params.len() == expected {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "Hurst preset `{name}` takes {expected} parameters, got {}",
                params.len()
            )))
        }
    };
    let pick = |defaults: &[f64]| -> Vec<f64> {
        if params.is_empty() {
            defaults.to_vec()
        } else {
            params.to_vec()
        }
    };
    let h = match name {
        "constant" => {
            if params.len() != 1 {
                return Err(Error::Parameter("Hurst preset `constant` takes exactly 1 parameter".into()));
            }
            HurstFunction::Constant { value: params[0] }
        }
        "linear" => {
            arity(2)?;
            let p = pick(&[0.9, -0.2]);
            HurstFunction::Linear {
                intercept: p[0],
                slope: p[1],
            }
        }
        "sine" => {
            arity(3)?;
            let p = pick(&[0.2, 2.0, 0.8]);
            HurstFunction::Sine {
                amplitude: p[0],
                cycles: p[1],
                offset: p[2],
            }
        }
        "logistic" => {
            arity(4)?;
            let p = pick(&[0.65, 0.25, 100.0, 0.5]);
            HurstFunction::Logistic {
                base: p[0],
                height: p[1],
                steepness: p[2],
                midpoint: p[3],
            }
        }
        "table" => {
            if params.is_empty() || params.len() % 2 != 0 {
                return Err(Error::Parameter("table takes an even, non-zero number of values".into()));
            }
            HurstFunction::Table {
                knots: params.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            }
        }
        other => return Err(Error::Parameter(format!("unknown Hurst preset `{other}`"))),
    };
    if let Some(bad) = params.iter().find(|x| !x.is_finite()) {
        return Err(Error::Parameter(format!("Hurst parameter {bad} is not finite")));
    }
    h.check()
}

/// What to do when `H` leaves `(1/α + ε, 1 - ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Reject the configuration.
    #[default]
    Strict,
    /// Clamp `H(t)` into `[1/α + ε, 1 - ε]` and record that it happened.
    Clamp,
}

/// A parameter set that passed [`validate_params`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    pub alpha: f64,
    pub hurst: HurstFunction,
    pub policy: BoundaryPolicy,
    pub lower: f64,
    pub upper: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
    /// True when some sampled `H` value had to be clamped.
    pub clamped: bool,
}

impl ValidatedConfig {
    /// `H(t)`, clamped under [`BoundaryPolicy::Clamp`].
    pub fn h(&self, t: f64) -> f64 {
        let h = self.hurst.eval(t);
        match self.policy {
            BoundaryPolicy::Strict => h,
            BoundaryPolicy::Clamp => h.clamp(self.lower, self.upper),
        }
    }
}

/// Accepts iff `1 < α < 2` and the sampled range of `H` lies in
/// `(1/α + ε, 1 - ε)`, `ε = 1e-6`. Every violated constraint is listed. Under
/// [`BoundaryPolicy::Clamp`] range violations are tolerated and flagged.
pub fn validate_params(alpha: f64, hurst: &HurstFunction, policy: BoundaryPolicy) -> Result<ValidatedConfig> {
    let mut problems = Vec::new();
    let alpha_ok = alpha.is_finite() && alpha > 1.0 && alpha < 2.0;
    if !alpha_ok {
        problems.push(format!("alpha = {alpha} violates 1 < alpha < 2"));
    }
    let (lo, hi) = hurst.sampled_range();
    if !(lo.is_finite() && hi.is_finite()) {
        problems.push("H takes non-finite values on [0, 1]".to_string());
    }
    let lower = if alpha_ok { 1.0 / alpha + BOUND_MARGIN } else { f64::NAN };
    let upper = 1.0 - BOUND_MARGIN;
    let below = alpha_ok && lo <= lower;
    let above = hi >= upper;
    if policy == BoundaryPolicy::Strict {
        if below {
            problems.push(format!(
                "min H = {lo} violates H > 1/alpha + {BOUND_MARGIN:e} = {lower}"
            ));
        }
        if above {
            problems.push(format!("max H = {hi} violates H < 1 - {BOUND_MARGIN:e}"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Constraints(problems));
    }
    Ok(ValidatedConfig {
        alpha,
        hurst: hurst.clone(),
        policy,
        lower,
        upper,
        sampled_min: lo,
        sampled_max: hi,
        clamped: policy == BoundaryPolicy::Clamp && (below || above),
    })
}

/// Everything that determines a synthesized path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathConfig {
    pub alpha: f64,
    pub hurst: HurstFunction,
    pub hf_depth: usize,
    pub lf_depth: usize,
    pub seed: u64,
    pub mode: CoefficientMode,
    pub method: Method,
    pub policy: BoundaryPolicy,
    /// Resolutions `(hf, lf)` of the Lévy paths behind a consistent-mode
    /// pyramid; default: the depths. Fixing them couples paths of different
    /// depths drawn with the same seed.
    pub resolution: Option<(usize, usize)>,
}

impl PathConfig {
    pub fn new(alpha: f64, hurst: HurstFunction, hf_depth: usize, lf_depth: usize, seed: u64) -> Self {
        Self {
            alpha,
            hurst,
            hf_depth,
            lf_depth,
            seed,
            mode: CoefficientMode::Consistent,
            method: Method::Abel,
            policy: BoundaryPolicy::Strict,
            resolution: None,
        }
    }

    /// `2^J_hf + 1` equispaced points of `[0, 1]`.
    pub fn default_t_grid(&self) -> Vec<f64> {
        linspace(0.0, 1.0, (1usize << self.hf_depth) + 1)
    }
}

/// Metadata echoed into every path output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMetadata {
    pub alpha: f64,
    pub hurst: String,
    pub hf_depth: usize,
    pub lf_depth: usize,
    pub seed: u64,
    pub mode: CoefficientMode,
    pub hf_resolution: usize,
    pub lf_resolution: usize,
    /// Independent-mode paths only approximate the joint law.
    pub mode_note: &'static str,
    pub method: Method,
    pub boundary_policy: BoundaryPolicy,
    pub clamp_applied: bool,
    pub h_lower: f64,
    pub h_upper: f64,
    pub sampled_h_min: f64,
    pub sampled_h_max: f64,
    pub points: usize,
    pub switch_x: f64,
}

/// `Y₁(t) = X₁(t, H(t))`, `Y₂(t) = X₂(t, H(t))` and `Y = Y₁ + Y₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub t: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub y: Vec<f64>,
    pub metadata: PathMetadata,
}

impl PathSample {
    /// One `# {json}` line, then `t,y1,y2,y` rows.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::with_capacity(64 * (self.t.len() + 2));
        let json = serde_json::to_string(&self.metadata).expect("metadata serializes");
        let _ = writeln!(out, "# {json}");
        out.push_str("t,y1,y2,y\n");
        for i in 0..self.t.len() {
            let _ = writeln!(out, "{},{},{},{}", self.t[i], self.y1[i], self.y2[i], self.y[i]);
        }
        out
    }
}

fn check_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Parameter("time grid is empty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Parameter(format!("time {t} outside [0, 1]")));
    }
    Ok(())
}

/// Validates `config`, generates its pyramid and evaluates the path on
/// `t_grid` (default: [`PathConfig::default_t_grid`]).
pub fn synthesize_path(config: &PathConfig, t_grid: Option<&[f64]>) -> Result<PathSample> {
    let validated = validate_params(config.alpha, &config.hurst, config.policy)?;
    if config.hf_depth < 1 || config.lf_depth < 2 {
        return Err(Error::Parameter(format!(
            "paths need hf depth ≥ 1 and lf depth ≥ 2, got ({}, {})",
            config.hf_depth, config.lf_depth
        )));
    }
    let mut spec = PyramidSpec::new(config.alpha, config.hf_depth, config.lf_depth, config.mode, config.seed);
    if let Some((hf, lf)) = config.resolution {
        spec = spec.with_resolutions(hf, lf);
    }
    let pyramid = spec.generate()?;
    let default_grid;
    let t_grid = match t_grid {
        Some(t) => t,
        None => {
            default_grid = config.default_t_grid();
            &default_grid
        }
    };
    synthesize_with_pyramid(&validated, &pyramid, t_grid, config.hf_depth, config.lf_depth, config.method)
}

/// Path evaluation against an existing pyramid, at depths no larger than the
/// pyramid's.
pub fn synthesize_with_pyramid(
    validated: &ValidatedConfig,
    pyramid: &CoefficientPyramid,
    t_grid: &[f64],
    hf_depth: usize,
    lf_depth: usize,
    method: Method,
) -> Result<PathSample> {
    check_t_grid(t_grid)?;
    if validated.alpha != pyramid.alpha() {
        return Err(Error::Parameter("pyramid alpha differs from the configuration".into()));
    }
    let params = KernelParams::with_switch(validated.alpha, DEFAULT_SWITCH_X)?;
    let eval = SeriesEvaluator::with_params(pyramid, params)?;
    let depth = Truncation::new(hf_depth, lf_depth);
    let points = t_grid
        .par_iter()
        .map(|&t| {
            let v = validated.h(t);
            let kernel = params.kernel(v)?;
            let y1 = eval.component_with(&kernel, Component::Hf, t, v, depth, method)?;
            let y2 = eval.component_with(&kernel, Component::Lf, t, v, depth, method)?;
            Ok((y1, y2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (y1, y2): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let y = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
    let mode = pyramid.mode();
    Ok(PathSample {
        t: t_grid.to_vec(),
        y1,
        y2,
        y,
        metadata: PathMetadata {
            alpha: validated.alpha,
            hurst: validated.hurst.spec_string(),
            hf_depth,
            lf_depth,
            seed: pyramid.seed(),
            mode,
            hf_resolution: pyramid.hf_resolution(),
            lf_resolution: pyramid.lf_resolution(),
            mode_note: match mode {
                CoefficientMode::Consistent => "exact joint law",
                CoefficientMode::Independent => "approximation: coefficients drawn independently",
            },
            method,
            boundary_policy: validated.policy,
            clamp_applied: validated.clamped,
            h_lower: validated.lower,
            h_upper: validated.upper,
            sampled_h_min: validated.sampled_min,
            sampled_h_max: validated.sampled_max,
            points: t_grid.len(),
            switch_x: params.switch_x(),
        },
    })
}
