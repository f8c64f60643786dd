//! Command-line front end for Haar-series LMSM synthesis and validation.
//!
//! Subcommands:
//!
//! * `simulate`: one multifractional path, written as CSV plus an SVG plot.
//! * `field`: a component of the field on a `(u, v)` grid.
//! * `converge`: a truncation-rate study with a fitted slope.
//! * `scale-check`: Monte Carlo marginal scales against the exact integrals.
//! * `render`: SVG plot of any path-style CSV.
//!
//! Every output file starts with `#` comment lines holding the effective
//! configuration as JSON, and is written atomically. Exit codes are 0 on
//! success, 2 for invalid configuration, 3 for a failed computation and 4
//! for I/O failures; errors are reported as one JSON line on stderr.

pub mod config;
pub mod error;
pub mod render;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lmsm_haar::analysis::{convergence_study, marginal_scale_study, ConvergenceSpec, MarginalSpec};
use lmsm_haar::lmsm::{hurst_preset, synthesize_path, validate_params, BoundaryPolicy, HurstFunction, PathConfig};
use lmsm_haar::series::{evaluate_field, linspace, Component, EvalDomain, Method, SeriesEvaluator, Truncation};
use lmsm_haar::stable::{CoefficientMode, PyramidSpec};
use serde_json::{json, Value};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "lmsm", version, about = "Haar-series synthesis of linear multifractional stable motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize one path Y(t) = X(t, H(t)) and plot it.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Evaluate a field component on a (u, v) grid.
    #[command(args_override_self = true)]
    Field(FieldArgs),
    /// Measure truncation-error decay rates.
    #[command(args_override_self = true)]
    Converge(ConvergeArgs),
    /// Compare Monte Carlo marginal scales with the exact integrals.
    #[command(name = "scale-check", args_override_self = true)]
    ScaleCheck(ScaleCheckArgs),
    /// Plot a path CSV as SVG.
    #[command(args_override_self = true)]
    Render(RenderArgs),
}

/// The three published example configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// α = 1.4, H(t) = 0.9 − 0.2t (clamped: H(1) < 1/α).
    #[value(name = "fig1-row1")]
    Fig1Row1,
    /// α = 1.7, H(t) = 0.2 sin(4πt) + 0.8 (clamped: max H = 1).
    #[value(name = "fig1-row2")]
    Fig1Row2,
    /// α = 1.6, H(t) = 0.65 + 0.25/(1 + exp(100(t − 0.5))).
    #[value(name = "fig1-row3")]
    Fig1Row3,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Row1 => "fig1-row1",
            Preset::Fig1Row2 => "fig1-row2",
            Preset::Fig1Row3 => "fig1-row3",
        }
    }

    /// `(α, H, clamp)` of the preset.
    pub fn parameters(self) -> (f64, HurstFunction, bool) {
        let (alpha, name, clamp) = match self {
            Preset::Fig1Row1 => (1.4, "linear", true),
            Preset::Fig1Row2 => (1.7, "sine", true),
            Preset::Fig1Row3 => (1.6, "logistic", false),
        };
        (alpha, hurst_preset(name, &[]).expect("built-in preset"), clamp)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Published configuration; other flags override its values.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hurst function, e.g. `constant:0.75`, `linear:0.9,-0.2`, `table:0,0.7;1,0.9`.
    #[arg(long)]
    pub hurst: Option<HurstFunction>,
    /// High-frequency depth (default 12).
    #[arg(long)]
    pub jhf: Option<usize>,
    /// Low-frequency depth (default 6).
    #[arg(long)]
    pub jlf: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "consistent")]
    pub mode: CoefficientMode,
    #[arg(long, default_value = "abel")]
    pub method: Method,
    /// Number of equispaced times (default 2^jhf + 1).
    #[arg(long)]
    pub points: Option<usize>,
    /// Clamp H into (1/α, 1) instead of rejecting the configuration.
    #[arg(long)]
    pub allow_boundary: bool,
    #[arg(long, default_value = "path.csv")]
    pub out: PathBuf,
    /// SVG path (default: the CSV path with extension `svg`).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub alpha: f64,
    /// hf, lf-plus, lf-minus, lf or total.
    #[arg(long, default_value = "total")]
    pub which: Component,
    /// Smallest v.
    #[arg(long)]
    pub a: f64,
    /// Largest v.
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 65)]
    pub nu: usize,
    #[arg(long, default_value_t = 9)]
    pub nv: usize,
    #[arg(long, default_value_t = 10)]
    pub jhf: usize,
    #[arg(long, default_value_t = 6)]
    pub jlf: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "consistent")]
    pub mode: CoefficientMode,
    #[arg(long, default_value = "abel")]
    pub method: Method,
    #[arg(long, default_value = "field.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// hf or lf.
    #[arg(long)]
    pub which: Component,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub v: f64,
    #[arg(long = "Jmin", alias = "jmin")]
    pub j_min: usize,
    #[arg(long = "Jmax", alias = "jmax")]
    pub j_max: usize,
    #[arg(long, default_value_t = 16)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pass band around the theoretical slope.
    #[arg(long, default_value_t = 0.15)]
    pub tol: f64,
    /// hf: sup over u = i/2^level (default Jmax + 2).
    #[arg(long)]
    pub grid_level: Option<usize>,
    /// lf: number of equispaced u points.
    #[arg(long, default_value_t = 257)]
    pub lf_points: usize,
    #[arg(long, default_value = "converge.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScaleCheckArgs {
    /// hf or lf.
    #[arg(long)]
    pub which: Component,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 20_000)]
    pub replicates: usize,
    #[arg(long, default_value = "consistent")]
    pub mode: CoefficientMode,
    /// `u:v` pairs separated by commas (default {0.25,0.5,1}×{0.7,0.8}).
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance for the pass line (default 0.05 hf, 0.08 lf).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value = "scale-check.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Path CSV to plot.
    #[arg(long)]
    pub input: PathBuf,
    /// SVG path (default: the input with extension `svg`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a successful run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Human-readable text for stdout.
    pub text: String,
    pub outputs: Vec<PathBuf>,
}

impl Outcome {
    /// One-line JSON record for stdout.
    pub fn machine_line(&self) -> String {
        let outputs: Vec<String> = self.outputs.iter().map(|p| p.display().to_string()).collect();
        json!({ "status": "ok", "outputs": outputs }).to_string()
    }
}

/// Parses `args` (program name first, `--config` allowed) and runs.
pub fn run_from_args<I, T>(args: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = config::expand_args(args)?;
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli.command),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp
            | clap::error::ErrorKind::DisplayVersion
            | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Ok(Outcome {
                text: e.render().to_string(),
                outputs: Vec::new(),
            }),
            _ => Err(CliError::Config(e.render().to_string().trim().replace('\n', " "))),
        },
    }
}

pub fn run(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Simulate(a) => simulate(&a),
        Command::Field(a) => field(&a),
        Command::Converge(a) => converge(&a),
        Command::ScaleCheck(a) => scale_check(&a),
        Command::Render(a) => render_file(&a),
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn comment_header(config: &Value) -> String {
    format!("# {config}\n")
}

fn csv_to_svg(csv: &str) -> CliResult<String> {
    Ok(render::render_svg(&render::Table::parse(csv)?))
}

fn simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let (mut alpha, mut hurst, mut clamp) = (None, None, a.allow_boundary);
    if let Some(p) = a.preset {
        let (pa, ph, pc) = p.parameters();
        alpha = Some(pa);
        hurst = Some(ph);
        clamp |= pc;
    }
    let alpha = a.alpha.or(alpha).ok_or_else(|| CliError::Config("simulate needs --alpha or --preset".into()))?;
    let hurst = a
        .hurst
        .clone()
        .or(hurst)
        .ok_or_else(|| CliError::Config("simulate needs --hurst or --preset".into()))?;
    let policy = if clamp { BoundaryPolicy::Clamp } else { BoundaryPolicy::Strict };
    // Reject bad parameters before anything else is done.
    validate_params(alpha, &hurst, policy)?;

    let mut cfg = PathConfig::new(alpha, hurst, a.jhf.unwrap_or(12), a.jlf.unwrap_or(6), a.seed);
    cfg.mode = a.mode;
    cfg.method = a.method;
    cfg.policy = policy;
    let grid = match a.points {
        Some(0) => return Err(CliError::Config("--points must be positive".into())),
        Some(n) => Some(linspace(0.0, 1.0, n)),
        None => None,
    };
    let path = synthesize_path(&cfg, grid.as_deref())?;
    let run = json!({
        "command": "simulate",
        "preset": a.preset.map(Preset::name),
        "allow_boundary": clamp,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let csv = comment_header(&run) + &path.to_csv();
    write_atomic(&a.out, &csv)?;
    let mut outputs = vec![a.out.clone()];
    if !a.no_svg {
        let svg_path = a.svg.clone().unwrap_or_else(|| a.out.with_extension("svg"));
        write_atomic(&svg_path, &csv_to_svg(&csv)?)?;
        outputs.push(svg_path);
    }
    let meta = &path.metadata;
    let text = format!(
        "simulated {} points, alpha {}, H {}, depths ({}, {}), seed {}{}\n",
        path.t.len(),
        meta.alpha,
        meta.hurst,
        meta.hf_depth,
        meta.lf_depth,
        meta.seed,
        if meta.clamp_applied { ", H clamped" } else { "" }
    );
    Ok(Outcome { text, outputs })
}

fn field(a: &FieldArgs) -> CliResult<Outcome> {
    let domain = EvalDomain::uniform(a.nu, a.nv, a.a, a.b, a.alpha)?;
    let pyr = PyramidSpec::new(a.alpha, a.jhf, a.jlf, a.mode, a.seed).generate()?;
    let eval = SeriesEvaluator::new(&pyr)?;
    let sample = evaluate_field(&domain, &eval, Truncation::new(a.jhf, a.jlf), a.which, a.method)?;
    let header = json!({
        "command": "field",
        "alpha": a.alpha,
        "which": a.which.as_str(),
        "v_range": [a.a, a.b],
        "nu": a.nu,
        "nv": a.nv,
        "jhf": a.jhf,
        "jlf": a.jlf,
        "seed": a.seed,
        "mode": a.mode.as_str(),
        "method": a.method.as_str(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&a.out, &sample.to_csv(Some(&header.to_string())))?;
    Ok(Outcome {
        text: format!("evaluated {} on {}x{} grid\n", a.which.as_str(), a.nu, a.nv),
        outputs: vec![a.out.clone()],
    })
}

fn hf_or_lf(which: Component) -> CliResult<()> {
    match which {
        Component::Hf | Component::Lf => Ok(()),
        other => Err(CliError::Config(format!("--which must be hf or lf, not {}", other.as_str()))),
    }
}

fn converge(a: &ConvergeArgs) -> CliResult<Outcome> {
    hf_or_lf(a.which)?;
    validate_params(a.alpha, &HurstFunction::Constant { value: a.v }, BoundaryPolicy::Strict)?;
    if a.j_min > a.j_max {
        return Err(CliError::Config(format!("Jmin = {} exceeds Jmax = {}", a.j_min, a.j_max)));
    }
    if a.replicates < lmsm_haar::analysis::MIN_REPLICATES {
        return Err(CliError::Config(format!(
            "--replicates must be at least {}, got {}",
            lmsm_haar::analysis::MIN_REPLICATES,
            a.replicates
        )));
    }
    let mut spec = ConvergenceSpec::new(a.which, a.alpha, a.v, (a.j_min..=a.j_max).collect(), a.replicates, a.seed);
    spec.hf_grid_level = a.grid_level;
    spec.lf_grid_points = a.lf_points;
    let report = convergence_study(&spec)?;
    let summary = report.summary(a.tol);
    let header = json!({
        "command": "converge",
        "spec": spec,
        "tol": a.tol,
        "fitted_slope": report.fitted_slope,
        "theoretical_slope": report.theoretical_slope,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut csv = comment_header(&header);
    for line in summary.lines() {
        csv.push_str("# ");
        csv.push_str(line);
        csv.push('\n');
    }
    csv.push_str(&report.to_csv());
    write_atomic(&a.out, &csv)?;
    Ok(Outcome {
        text: summary,
        outputs: vec![a.out.clone()],
    })
}

fn parse_points(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (u, v) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("point `{pair}` is not `u:v`")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("`{x}` in point `{pair}` is not a number")))
            };
            Ok((num(u)?, num(v)?))
        })
        .collect()
}

fn scale_check(a: &ScaleCheckArgs) -> CliResult<Outcome> {
    hf_or_lf(a.which)?;
    let points = match &a.points {
        Some(s) => parse_points(s)?,
        None => [0.25, 0.5, 1.0].iter().flat_map(|&u| [(u, 0.7), (u, 0.8)]).collect(),
    };
    for &(u, v) in &points {
        EvalDomain::new(vec![u], vec![v], a.alpha)?;
    }
    let tol = a.tol.unwrap_or(if a.which == Component::Hf { 0.05 } else { 0.08 });
    let spec = MarginalSpec {
        which: a.which,
        alpha: a.alpha,
        points,
        depth: a.depth,
        replicates: a.replicates,
        mode: a.mode,
        seed: a.seed,
    };
    let report = marginal_scale_study(&spec)?;
    let mut text = String::new();
    for p in &report.points {
        text.push_str(&format!(
            "u = {}, v = {}: estimate {:.5}, theory {:.5}, truncated series {:.5}, relative error {:.4} -> {}\n",
            p.u,
            p.v,
            p.estimate,
            p.theoretical,
            p.truncated,
            p.relative_error(),
            if p.relative_error() <= tol { "PASS" } else { "FAIL" }
        ));
    }
    let header = json!({
        "command": "scale-check",
        "spec": spec,
        "tol": tol,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&a.out, &(comment_header(&header) + &report.to_csv()))?;
    Ok(Outcome {
        text,
        outputs: vec![a.out.clone()],
    })
}

fn render_file(a: &RenderArgs) -> CliResult<Outcome> {
    let csv = std::fs::read_to_string(&a.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", a.input.display())))?;
    let svg = csv_to_svg(&csv)?;
    let out = a.out.clone().unwrap_or_else(|| a.input.with_extension("svg"));
    write_atomic(&out, &svg)?;
    Ok(Outcome {
        text: String::new(),
        outputs: vec![out],
    })
}
