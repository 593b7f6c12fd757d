//! Command-line front end.
//!
//! Every subcommand echoes its resolved configuration as one JSON line on
//! standard error before running. Files are written atomically, so a failed
//! run leaves no partial output behind.
//!
//! Exit codes: 0 success, 2 bad flags or arguments, 3 I/O or file format,
//! 4 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{run_experiment, ExperimentConfig, ImageSource, NoiseLevel};
use crate::error::{Error, Result};
use crate::io::{read_image, write_atomic, write_image};
use crate::noise_stats::{empirical_noise_moments_with, MomentOptions};
use crate::par;
use crate::quadrature::Family;
use crate::risk::{risk_curve, risk_curve_closed, risk_curve_mc, write_risk_csv, Profile, RiskMethod};
use crate::shrinkage::{denoise, DenoiseConfig, LambdaChoice, Method, SigmaChoice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hyperdenoise",
    version,
    about = "Hyperanalytic wavelet denoising and its risk and noise statistics"
)]
pub struct Cli {
    /// Worker threads (default: all available cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise one image (PGM P5 or HYPD raw); the output keeps the input format.
    Denoise(DenoiseArgs),
    /// Paired Monte Carlo comparison of methods on a clean image.
    Simulate(SimulateArgs),
    /// Risk of hard thresholding on one observation vector, by cubature and Monte Carlo.
    Risk(RiskArgs),
    /// Empirical moments of quadrature coefficients of pure noise.
    NoiseStats(NoiseStatsArgs),
}

/// Flags shared by `denoise` and `simulate`.
#[derive(Debug, Args)]
pub struct ShrinkArgs {
    /// Wavelet filter bank.
    #[arg(long, default_value = "la8", value_parser = ["la8", "haar", "d4"])]
    pub wavelet: String,

    /// Decomposition depth J.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub levels: u32,

    /// Cycle-spin grid side S (S x S shifts are averaged).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub spins: u32,

    /// Threshold: `universal`, or lambda in noise standard deviations.
    #[arg(long, default_value = "universal", value_parser = parse_lambda_choice)]
    pub lambda: LambdaChoice,

    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy input image.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Where to write the denoised image.
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,

    /// Shrinkage rule: c (coefficient), a (analytic), r (Riesz), h (hypercomplex).
    #[arg(long, default_value = "h", value_parser = parse_method)]
    pub method: Method,

    /// Noise standard deviation: `auto` (MAD of the finest diagonal subband) or a value.
    #[arg(long, default_value = "auto", value_parser = parse_sigma_choice)]
    pub sigma: SigmaChoice,

    #[command(flatten)]
    pub shrink: ShrinkArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Clean image: a file path or `builtin:NAME?key=val&...`
    /// (NAME is oscillation, ridge, blobs or composite).
    #[arg(long, value_name = "SOURCE")]
    pub image: String,

    /// Comma-separated target SNRs, rms(q)/sigma.
    #[arg(long, value_delimiter = ',', value_name = "LIST", conflicts_with = "noise_sigma")]
    pub snr: Vec<f64>,

    /// Comma-separated noise standard deviations (alternative to --snr).
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub noise_sigma: Vec<f64>,

    /// Comma-separated methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "c,a,r,h", value_parser = parse_method)]
    pub methods: Vec<Method>,

    /// Noisy replications per noise level.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,

    /// PSNR peak (default: 255 for PGM input, max |q| otherwise).
    #[arg(long)]
    pub peak: Option<f64>,

    /// CSV destination (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub shrink: ShrinkArgs,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Rule: c, a, r1 (Riesz, subbands 1 and 4), r2 (Riesz, subbands 2 and 3), h.
    #[arg(long, value_parser = parse_risk_method)]
    pub method: RiskMethod,

    /// How |theta| is spread over the components: fig2a, fig2b, fig2c, fig2d or custom.
    #[arg(long, default_value = "fig2b", value_parser = ["fig2a", "fig2b", "fig2c", "fig2d", "custom"])]
    pub profile: String,

    /// Comma-separated |theta| values to evaluate.
    #[arg(long, value_delimiter = ',', value_name = "LIST", allow_negative_numbers = true)]
    pub theta: Vec<f64>,

    /// Range of |theta| values as START:STOP:STEP (inclusive).
    #[arg(long, value_name = "SPEC", value_parser = parse_grid)]
    pub grid: Option<Grid>,

    /// Direction vector for `--profile custom`, one entry per component.
    #[arg(long, value_delimiter = ',', value_name = "LIST", allow_negative_numbers = true)]
    pub direction: Vec<f64>,

    /// Threshold: `universal:K` (K coefficients), `universal` (K = 65536) or lambda.
    #[arg(long, default_value = "universal:65536", value_parser = parse_risk_lambda)]
    pub lambda: RiskLambda,

    /// Also estimate by Monte Carlo with this many draws per point.
    #[arg(long, value_name = "N")]
    pub mc: Option<usize>,

    /// Seed for the Monte Carlo draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV destination (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseStatsArgs {
    /// Quadrature family: riesz or hct.
    #[arg(long, value_parser = parse_family)]
    pub family: Family,

    /// Image side (power of two, at least 64).
    #[arg(long, default_value_t = 256)]
    pub n: usize,

    /// Independent noise images; coefficients are pooled within each subband.
    #[arg(long, default_value_t = 8)]
    pub reps: usize,

    /// Seed for the noise images.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Decomposition level whose subbands are measured.
    #[arg(long, default_value_t = 1)]
    pub level: usize,

    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Wavelet filter bank.
    #[arg(long, default_value = "la8", value_parser = ["la8", "haar", "d4"])]
    pub wavelet: String,

    /// CSV destination (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLambda {
    Universal(usize),
    Value(f64),
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_risk_method(s: &str) -> std::result::Result<RiskMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_nonneg(s: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{what} must be a number, got '{s}'"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{what} must be finite and >= 0, got {v}"));
    }
    Ok(v)
}

fn parse_sigma_choice(s: &str) -> std::result::Result<SigmaChoice, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(SigmaChoice::Auto);
    }
    let v = parse_nonneg(s, "sigma")?;
    if v == 0.0 {
        return Err("sigma must be > 0".into());
    }
    Ok(SigmaChoice::Known(v))
}

fn parse_lambda_choice(s: &str) -> std::result::Result<LambdaChoice, String> {
    if s.eq_ignore_ascii_case("universal") {
        return Ok(LambdaChoice::Universal);
    }
    let v = parse_nonneg(s, "lambda")?;
    Ok(LambdaChoice::Explicit(v * v))
}

fn parse_risk_lambda(s: &str) -> std::result::Result<RiskLambda, String> {
    if s.eq_ignore_ascii_case("universal") {
        return Ok(RiskLambda::Universal(1 << 16));
    }
    if let Some(k) = s.strip_prefix("universal:") {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| format!("universal:K needs an integer K, got '{k}'"))?;
        return Ok(RiskLambda::Universal(k));
    }
    parse_nonneg(s, "lambda").map(RiskLambda::Value)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be START:STOP:STEP, got '{s}'"));
    }
    let g = Grid {
        start: parse_nonneg(parts[0], "grid start")?,
        stop: parse_nonneg(parts[1], "grid stop")?,
        step: parse_nonneg(parts[2], "grid step")?,
    };
    if g.step <= 0.0 || g.stop < g.start {
        return Err(format!("grid needs STOP >= START and STEP > 0, got '{s}'"));
    }
    if (g.stop - g.start) / g.step > 1e6 {
        return Err("grid has more than 10^6 points".into());
    }
    Ok(g)
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io(_) | Error::Csv(_) | Error::Format(_) => EXIT_IO,
        Error::ShapeMismatch(_) | Error::Numerical(_) => EXIT_NUMERIC,
    }
}

fn echo<T: Serialize>(command: &str, threads: usize, config: &T) {
    #[derive(Serialize)]
    struct Echo<'a, T> {
        command: &'a str,
        threads: usize,
        config: &'a T,
    }
    let line = serde_json::to_string(&Echo {
        command,
        threads,
        config,
    })
    .unwrap_or_else(|e| format!("{{\"command\":\"{command}\",\"echo_error\":\"{e}\"}}"));
    eprintln!("{line}");
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_denoise(args: &DenoiseArgs, threads: usize) -> Result<()> {
    let cfg = DenoiseConfig {
        method: args.method,
        wavelet: args.shrink.wavelet.clone(),
        levels: args.shrink.levels as usize,
        sigma: args.sigma,
        lambda: args.shrink.lambda,
        spins: args.shrink.spins as usize,
        seed: args.shrink.seed,
    };
    #[derive(Serialize)]
    struct Resolved<'a> {
        input: &'a Path,
        output: &'a Path,
        #[serde(flatten)]
        denoise: &'a DenoiseConfig,
    }
    echo(
        "denoise",
        threads,
        &Resolved {
            input: &args.input,
            output: &args.output,
            denoise: &cfg,
        },
    );
    cfg.validate()?;
    let (noisy, fmt) = read_image(&args.input)?;
    let out = denoise(&noisy, &cfg)?;
    write_image(&args.output, &out.image, fmt)?;
    println!(
        "sigma={} lambda_sq={} kept_fraction={}",
        out.sigma, out.lambda_sq, out.kept_fraction
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, threads: usize) -> Result<()> {
    let image = ImageSource::parse(&args.image)?;
    let noise: Vec<NoiseLevel> = if !args.noise_sigma.is_empty() {
        args.noise_sigma.iter().map(|&s| NoiseLevel::Sigma(s)).collect()
    } else if !args.snr.is_empty() {
        args.snr.iter().map(|&s| NoiseLevel::Snr(s)).collect()
    } else {
        return Err(Error::invalid("one of --snr or --noise-sigma is required"));
    };
    if let Some(bad) = args
        .snr
        .iter()
        .chain(&args.noise_sigma)
        .find(|v| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::invalid(format!("noise levels must be finite and > 0, got {bad}")));
    }
    let cfg = ExperimentConfig {
        image,
        noise,
        methods: args.methods.clone(),
        reps: args.reps as usize,
        seed: args.shrink.seed,
        wavelet: args.shrink.wavelet.clone(),
        levels: args.shrink.levels as usize,
        spins: args.shrink.spins as usize,
        lambda: args.shrink.lambda,
        peak: args.peak,
    };
    echo("simulate", threads, &cfg);
    let table = run_experiment(&cfg)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn cmd_risk(args: &RiskArgs, threads: usize) -> Result<()> {
    let profile = if args.profile == "custom" {
        if args.direction.is_empty() {
            return Err(Error::invalid("--profile custom needs --direction"));
        }
        Profile::Custom(args.direction.clone())
    } else {
        if !args.direction.is_empty() {
            return Err(Error::invalid("--direction applies only to --profile custom"));
        }
        Profile::parse(&args.profile)?
    };
    let lambda = match args.lambda {
        RiskLambda::Universal(k) => args.method.universal_lambda(k)?,
        RiskLambda::Value(v) => v,
    };
    let mut grid: Vec<f64> = args.theta.clone();
    if let Some(g) = args.grid {
        grid.extend(g.points());
    }
    if grid.is_empty() {
        grid = Grid {
            start: 0.0,
            stop: 8.0,
            step: 0.25,
        }
        .points();
    }
    if let Some(bad) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!("|theta| must be finite and >= 0, got {bad}")));
    }
    if let Some(n) = args.mc {
        if n < 10_000 {
            return Err(Error::invalid(format!("--mc needs at least 10000 draws, got {n}")));
        }
    }

    #[derive(Serialize)]
    struct Resolved<'a> {
        method: RiskMethod,
        profile: &'a Profile,
        lambda: f64,
        lambda_flag: RiskLambda,
        theta_abs: &'a [f64],
        mc: Option<usize>,
        seed: u64,
        output: Option<&'a Path>,
    }
    echo(
        "risk",
        threads,
        &Resolved {
            method: args.method,
            profile: &profile,
            lambda,
            lambda_flag: args.lambda,
            theta_abs: &grid,
            mc: args.mc,
            seed: args.seed,
            output: args.output.as_deref(),
        },
    );

    let mut points = risk_curve_closed(args.method, &profile, lambda, &grid)?;
    points.extend(risk_curve(args.method, &profile, lambda, &grid)?);
    if let Some(n) = args.mc {
        points.extend(risk_curve_mc(args.method, &profile, lambda, &grid, n, args.seed)?);
    }
    let mut buf = Vec::new();
    write_risk_csv(&points, &mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn cmd_noise_stats(args: &NoiseStatsArgs, threads: usize) -> Result<()> {
    let wavelet: &'static str = match args.wavelet.as_str() {
        "la8" => "la8",
        "haar" => "haar",
        "d4" => "d4",
        other => return Err(Error::invalid(format!("unknown wavelet '{other}'"))),
    };
    let opts = MomentOptions {
        level: args.level,
        sigma: args.sigma,
        wavelet,
    };
    #[derive(Serialize)]
    struct Resolved<'a> {
        family: String,
        n: usize,
        reps: usize,
        seed: u64,
        level: usize,
        sigma: f64,
        wavelet: &'a str,
        output: Option<&'a Path>,
    }
    echo(
        "noise-stats",
        threads,
        &Resolved {
            family: args.family.to_string(),
            n: args.n,
            reps: args.reps,
            seed: args.seed,
            level: args.level,
            sigma: args.sigma,
            wavelet,
            output: args.output.as_deref(),
        },
    );
    let report = empirical_noise_moments_with(args.family, args.n, args.reps, args.seed, &opts)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &buf)
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        par::init_threads(t as usize);
    }
    let threads = par::current_threads();
    let res = match &cli.command {
        Command::Denoise(a) => cmd_denoise(a, threads),
        Command::Simulate(a) => cmd_simulate(a, threads),
        Command::Risk(a) => cmd_risk(a, threads),
        Command::NoiseStats(a) => cmd_noise_stats(a, threads),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
