//! Command-line front end.
//!
//! Every command resolves its parameters (flags override `--config` file
//! values, which override defaults), validates them, then computes a
//! [`Report`] that is rendered as CSV or JSON.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::detection::{self, ExperimentBudget};
use crate::error::Error;
use crate::pointer::{weak_value, CouplingParams, SelectionAngle};
use crate::shot_noise::{self, FrequencyBinning, Normalization};
use crate::snr::{self, REFERENCE_THETAS};

use config::ConfigFile;
pub use output::{Cell, Format, Report};

pub const DEFAULT_SEED: u64 = 20_110_101;
pub const DEFAULT_MC_THETA: f64 = 0.1;
pub const DEFAULT_MC_N_OUT: f64 = 1e4;
pub const DEFAULT_MC_TRIALS: usize = 2000;
pub const DEFAULT_LIMIT_THETA: f64 = 1e-3;
pub const DEFAULT_LAMBDA0: f64 = 1e-6;
pub const DEFAULT_PULSE_ENERGY: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numerical(e)
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wvalab",
    version,
    about = "Weak-value amplification under photon shot noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointer shift g⟨ω−ω₀⟩′ versus measurement strength s.
    Shift(SweepArgs),
    /// Shot-noise second moment g²⟨(ω−ω₀)²⟩′ versus s.
    Noise(SweepArgs),
    /// Signal-to-noise ratio versus s.
    Snr(SweepArgs),
    /// SNR-optimal strength for each θ.
    Optimize(OptimizeArgs),
    /// Poisson photon-counting simulation of the shift estimate.
    Montecarlo(MonteCarloArgs),
    /// Minimum detectable mirror displacement.
    Limit(LimitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` parameter file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Selection angle(s), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Option<Vec<f64>>,
    /// Explicit strengths, comma separated (overrides the log grid).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s: Option<Vec<f64>>,
    /// `default` selects the 400-point grid over [1e-8, 10].
    #[arg(long)]
    pub s_grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub s_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub s_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Output photon number (scales the SNR by √n_out).
    #[arg(long, allow_negative_numbers = true)]
    pub n_out: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Expected,
    Realized,
}

#[derive(Debug, Clone, Args)]
pub struct MonteCarloArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Measurement strength (default: the SNR optimum for θ).
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n_out: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Half width of the binned window in units of σ_ω.
    #[arg(long, allow_negative_numbers = true)]
    pub half_width: Option<f64>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    /// Write per-trial shift estimates to this CSV file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Central wavelength in meters.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda0: Option<f64>,
    /// Bandwidth ratio σ_ω/ω₀.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_ratio: Option<f64>,
    /// Input photon number (overrides --energy).
    #[arg(long, allow_negative_numbers = true)]
    pub n_in: Option<f64>,
    /// Pulse energy in joules used to derive the photon number.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Rendered output and where it should go.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub text: String,
    pub out: Option<PathBuf>,
}

fn load_config(output: &OutputArgs) -> Result<ConfigFile, CliError> {
    match &output.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn render(report: &Report, output: &OutputArgs, cfg: &ConfigFile) -> Result<Rendered, CliError> {
    let format = cfg.resolve(output.format, "format")?.unwrap_or_default();
    let out = cfg.resolve(output.out.clone(), "out")?;
    Ok(Rendered {
        text: report.render(format),
        out,
    })
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

impl std::str::FromStr for NormalizationArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <NormalizationArg as ValueEnum>::from_str(s, true)
    }
}

/// Runs a parsed command and returns its rendered output.
pub fn execute(cli: &Cli) -> Result<Rendered, CliError> {
    match &cli.command {
        Command::Shift(args) => cmd_sweep(SweepKind::Shift, args),
        Command::Noise(args) => cmd_sweep(SweepKind::Noise, args),
        Command::Snr(args) => cmd_sweep(SweepKind::Snr, args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Limit(args) => cmd_limit(args),
    }
}

/// Parses `argv` (including the program name) and runs it.
pub fn execute_args<I, T>(argv: I) -> Result<Rendered, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Shift,
    Noise,
    Snr,
}

fn theta_list(values: Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
    let mut thetas = values.unwrap_or_else(|| REFERENCE_THETAS.to_vec());
    for &t in &thetas {
        if !(t > 0.0 && t <= std::f64::consts::PI) {
            return Err(CliError::Usage(format!("theta {t} is not in (0, π]")));
        }
    }
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    Ok(thetas)
}

fn strength_grid(args: &SweepArgs, cfg: &ConfigFile) -> Result<Vec<f64>, CliError> {
    if let Some(mut s) = cfg.resolve_list(args.s.clone(), "s")? {
        if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(CliError::Usage("s values must be finite and > 0".into()));
        }
        s.sort_by(f64::total_cmp);
        s.dedup();
        return Ok(s);
    }
    if let Some(name) = cfg.resolve(args.s_grid.clone(), "s-grid")? {
        if name != "default" {
            return Err(CliError::Usage(format!("unknown s-grid `{name}`")));
        }
    }
    let min = cfg
        .resolve(args.s_min, "s-min")?
        .unwrap_or(snr::DEFAULT_S_MIN);
    let max = cfg
        .resolve(args.s_max, "s-max")?
        .unwrap_or(snr::DEFAULT_S_MAX);
    let points = cfg
        .resolve(args.s_points, "s-points")?
        .unwrap_or(snr::DEFAULT_SWEEP_POINTS);
    Ok(snr::log_grid(min, max, points)?)
}

pub fn cmd_sweep(kind: SweepKind, args: &SweepArgs) -> Result<Rendered, CliError> {
    let cfg = load_config(&args.output)?;
    let thetas = theta_list(cfg.resolve_list(args.theta.clone(), "theta")?)?;
    let grid = strength_grid(args, &cfg)?;
    let beta = cfg.resolve(args.beta, "beta")?.unwrap_or(0.0);
    if !beta.is_finite() {
        return Err(CliError::Usage("beta must be finite".into()));
    }
    let n_out = cfg.resolve(args.n_out, "n-out")?.unwrap_or(1.0);
    if !(n_out >= 1.0) || !n_out.is_finite() {
        return Err(CliError::Usage(format!("n-out {n_out} must be >= 1")));
    }

    let (command, column) = match kind {
        SweepKind::Shift => ("shift", "shift_g"),
        SweepKind::Noise => ("noise", "second_g2"),
        SweepKind::Snr => ("snr", "snr"),
    };
    let mut report = Report::new(command, vec!["theta", "s", column]);
    report.echo("theta", join(&thetas));
    report.echo("s_points", grid.len());
    report.echo("s_min", output::format_float(grid[0]));
    report.echo("s_max", output::format_float(grid[grid.len() - 1]));
    report.echo("beta", output::format_float(beta));
    if kind == SweepKind::Snr {
        report.echo("n_out", output::format_float(n_out));
    }

    for p in snr::sweep(&grid, &thetas, beta)? {
        let value = match kind {
            SweepKind::Shift => p.shift_g,
            SweepKind::Noise => p.second_g2,
            SweepKind::Snr => n_out.sqrt() * p.snr_single_photon,
        };
        report.push(vec![p.theta.into(), p.s.into(), value.into()]);
    }
    render(&report, &args.output, &cfg)
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<Rendered, CliError> {
    let cfg = load_config(&args.output)?;
    let thetas = theta_list(cfg.resolve_list(args.theta.clone(), "theta")?)?;
    if thetas.iter().any(|&t| t >= std::f64::consts::PI) {
        return Err(CliError::Usage("theta must be < π for optimization".into()));
    }
    let mut report = Report::new("optimize", vec!["theta", "s_opt", "snr_at_opt", "residual"]);
    report.echo("theta", join(&thetas));
    for theta in thetas {
        let opt = snr::optimal_s(theta)?;
        report.push(vec![
            opt.theta.into(),
            opt.s_opt.into(),
            opt.snr_at_opt.into(),
            opt.residual.into(),
        ]);
    }
    render(&report, &args.output, &cfg)
}

pub fn cmd_montecarlo(args: &MonteCarloArgs) -> Result<Rendered, CliError> {
    let cfg = load_config(&args.output)?;
    let theta = cfg
        .resolve(args.theta, "theta")?
        .unwrap_or(DEFAULT_MC_THETA);
    let angle = SelectionAngle::new(theta)?;
    let a_w = weak_value(angle)?;
    let s = match cfg.resolve(args.s, "s")? {
        Some(s) => s,
        None => snr::optimal_s(theta)?.s_opt,
    };
    if !(s > 0.0) || !s.is_finite() {
        return Err(CliError::Usage(format!("s {s} must be finite and > 0")));
    }
    let beta = cfg.resolve(args.beta, "beta")?.unwrap_or(0.0);
    let n_out = cfg
        .resolve(args.n_out, "n-out")?
        .unwrap_or(DEFAULT_MC_N_OUT);
    if !(n_out > 0.0) || !n_out.is_finite() {
        return Err(CliError::Usage(format!(
            "n-out {n_out} must be finite and > 0"
        )));
    }
    let trials = cfg
        .resolve(args.trials, "trials")?
        .unwrap_or(DEFAULT_MC_TRIALS);
    if trials < shot_noise::MIN_TRIALS {
        return Err(CliError::Usage(format!(
            "trials {trials} < {}",
            shot_noise::MIN_TRIALS
        )));
    }
    let seed = cfg.resolve(args.seed, "seed")?.unwrap_or(DEFAULT_SEED);
    let bins = cfg
        .resolve(args.bins, "bins")?
        .unwrap_or(shot_noise::DEFAULT_BINS);
    let half_width = cfg
        .resolve(args.half_width, "half-width")?
        .unwrap_or(shot_noise::DEFAULT_HALF_WIDTH_SIGMAS);
    let normalization = match cfg.resolve(args.normalization, "normalization")? {
        None | Some(NormalizationArg::Expected) => Normalization::Expected,
        Some(NormalizationArg::Realized) => Normalization::Realized,
    };
    let dump = cfg.resolve(args.dump.clone(), "dump")?;

    // unit σ_ω: everything below is reported in g-scaled units
    let params = CouplingParams::dimensionless(s, beta)?;
    let state = params.gaussian_state();
    let binning = FrequencyBinning::new(params.omega0(), 1.0, half_width, bins)?;

    let run = shot_noise::run_with(
        &params,
        a_w,
        &state,
        &binning,
        n_out,
        trials,
        seed,
        normalization,
    )?;
    let g = run.g;

    let mut report = Report::new("montecarlo", vec!["quantity", "value"]);
    report.seed = Some(seed);
    report.echo("theta", output::format_float(theta));
    report.echo("s", output::format_float(s));
    report.echo("beta", output::format_float(beta));
    report.echo("n_out", output::format_float(n_out));
    report.echo("trials", trials);
    report.echo("bins", bins);
    report.echo("half_width", output::format_float(half_width));
    report.echo(
        "normalization",
        match normalization {
            Normalization::Expected => "expected",
            Normalization::Realized => "realized",
        },
    );

    let mut row = |name: &str, value: Cell| report.push(vec![name.into(), value]);
    row("empirical_mean_shift_g", (g * run.empirical_mean).into());
    row("analytic_shift_g", (g * run.analytic_shift).into());
    row(
        "empirical_variance_g2",
        (g * g * run.empirical_variance).into(),
    );
    row(
        "analytic_variance_g2",
        (g * g * run.analytic_variance).into(),
    );
    row("variance_ratio", run.variance_ratio().into());
    row("empirical_snr", run.empirical_snr.into());
    row("analytic_snr", run.analytic_snr.into());
    row("snr_ratio", run.snr_ratio().into());
    if beta == 0.0 {
        row(
            "closed_form_snr",
            snr::snr_closed_form(s, theta, n_out.max(1.0))?.into(),
        );
    }

    if let Some(path) = dump {
        let mut text = String::from("trial,shift_g\n");
        for (i, x) in run.shift_estimates.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", output::format_float(g * x)));
        }
        std::fs::write(&path, text)?;
    }
    render(&report, &args.output, &cfg)
}

pub fn cmd_limit(args: &LimitArgs) -> Result<Rendered, CliError> {
    let cfg = load_config(&args.output)?;
    let theta = cfg
        .resolve(args.theta, "theta")?
        .unwrap_or(DEFAULT_LIMIT_THETA);
    let lambda0 = cfg
        .resolve(args.lambda0, "lambda0")?
        .unwrap_or(DEFAULT_LAMBDA0);
    let sigma_ratio = cfg.resolve(args.sigma_ratio, "sigma-ratio")?.unwrap_or(1.0);
    let n_in = match cfg.resolve(args.n_in, "n-in")? {
        Some(n) => n,
        None => {
            let energy = cfg
                .resolve(args.energy, "energy")?
                .unwrap_or(DEFAULT_PULSE_ENERGY);
            detection::photons_from_energy(energy, lambda0)?
        }
    };
    let budget = ExperimentBudget::new(n_in, lambda0, sigma_ratio, theta)?;
    let limit = detection::detection_limit(&budget)?;

    let mut report = Report::new("limit", vec!["quantity", "value"]);
    report.echo("theta", output::format_float(theta));
    report.echo("lambda0", output::format_float(lambda0));
    report.echo("sigma_ratio", output::format_float(sigma_ratio));
    let mut row = |name: &str, value: f64| report.push(vec![name.into(), value.into()]);
    row("n_in", n_in);
    row("n_out", limit.n_out);
    row("ell_min_m", limit.ell_min);
    row("s_threshold", limit.s_threshold);
    row("snr_at_threshold", limit.snr_at_threshold);
    row(
        "self_consistency_error",
        (limit.snr_at_threshold - 1.0).abs(),
    );
    render(&report, &args.output, &cfg)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| output::format_float(*v))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<String, CliError> {
        let mut argv = vec!["wvalab"];
        argv.extend_from_slice(args);
        execute_args(argv).map(|r| r.text)
    }

    fn rows(text: &str) -> Vec<Vec<String>> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn shift_default_grid() {
        let text = run(&["shift", "--theta", "1e-1", "--s-grid", "default"]).unwrap();
        let r = rows(&text);
        assert_eq!(r.len(), 400);
        assert!(text.contains("\ntheta,s,shift_g\n"));
    }

    #[test]
    fn usage_errors_exit_two() {
        let err = run(&["snr", "--theta", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&["montecarlo", "--trials", "10"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&["limit", "--sigma-ratio", "2"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&["bogus"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn numerical_errors_exit_one() {
        let e = CliError::from(Error::DegeneratePostSelection {
            denominator: 0.0,
            threshold: 1e-30,
        });
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn optimize_rows() {
        let text = run(&["optimize"]).unwrap();
        let r = rows(&text);
        assert_eq!(r.len(), 4);
        let s: Vec<f64> = r.iter().map(|row| row[1].parse().unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn json_output() {
        let text = run(&["limit", "--format", "json"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["metadata"]["command"], "limit");
        assert_eq!(v["rows"][2]["quantity"], "ell_min_m");
    }

    #[test]
    fn config_file_with_override() {
        let dir = std::env::temp_dir().join(format!("wvalab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "theta = 0.01, 0.1\ns-points = 10\nformat = json\n").unwrap();
        let p = path.to_str().unwrap();
        let text = run(&["noise", "--config", p, "--format", "csv"]).unwrap();
        assert_eq!(rows(&text).len(), 20);
        let text = run(&["noise", "--config", p, "--theta", "0.5"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 10);
        std::fs::remove_dir_all(&dir).ok();
    }
}
