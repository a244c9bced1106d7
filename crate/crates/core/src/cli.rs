//! `sensordiff` command line.
//!
//! Every subcommand validates its flags and inputs, computes all outputs in
//! memory and only then writes files, printing one `key=value` summary line
//! to stdout. Exit codes: 0 success, 1 validation error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diffusion_forecast::{
    fit_sigma2, forecast, simulate_brownian, skorokhod_exit, TwoPointDist,
};
use crate::ebm::{ebm_train, read_model, render_model, EbmConfig};
use crate::error::{Error, Result};
use crate::markov_mle::{smooth_all, smooth_series};
use crate::normality::sw_test_increments;
use crate::ortho_basis::{orthogonalize, segment_vectors};
use crate::phase_classifier::{
    build_tree, classify_point, extract_rules, read_rules, render_rules, target_class_count,
};
use crate::series_io::{detect_header, format_real as f, load_series, render_series, SampleSeries};

#[derive(Debug, Parser)]
#[command(
    name = "sensordiff",
    version,
    about = "Sensor series as distorted Brownian motion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shapiro-Wilk test on the first differences of one feature.
    Normtest(NormtestArgs),
    /// Pairwise MLE smoothing of one feature.
    Smooth(SmoothArgs),
    /// Segment vectors of the smoothed feature and their rescaled basis.
    Basis(BasisArgs),
    /// Train an energy model on the smoothed rows.
    Train(TrainArgs),
    /// Build the energy-gap tree and write its association rules.
    Classify(ClassifyArgs),
    /// Martingale forecast of the smoothed feature.
    Predict(PredictArgs),
    /// Simulate a Brownian path, or run the two-point exit-time check.
    Simulate(SimulateArgs),
    /// Validate a rule file, optionally classifying one point.
    RulesCheck(RulesCheckArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input series CSV (`t,v1,...`, optional `t,` header line).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormtestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0)]
    pub feature: usize,
    #[arg(long, default_value_t = crate::normality::DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub feature: usize,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// CSV with columns `k,zt,zv,c,y,fourier,parity`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub feature: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Hidden units, one per temperature.
    #[arg(long, default_value_t = 64)]
    pub layers: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    /// Geometric cooling factor in (0, 1).
    #[arg(long = "alpha-cool", default_value_t = 0.95)]
    pub alpha_cool: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Rule file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Target leaf count; defaults to 2^s.
    #[arg(long)]
    pub k: Option<usize>,
    /// Gaps below tau times the energy range are not split.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Forecast CSV (`horizon,mean,variance,sigma2`).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub feature: usize,
    /// Seconds past the last sample.
    #[arg(long)]
    pub horizon: f64,
    /// Number of sampled future paths.
    #[arg(long, default_value_t = 0)]
    pub paths: usize,
    /// Steps per sampled path.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Path CSV (`path,step,t,value`); required with `--paths`.
    #[arg(long, value_name = "PATH")]
    pub paths_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Series CSV for the simulated path.
    #[arg(long, value_name = "PATH", required_unless_present = "exit_a")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lower exit level (< 0); switches to the exit-time check.
    #[arg(
        long,
        allow_hyphen_values = true,
        requires = "exit_b",
        conflicts_with = "out"
    )]
    pub exit_a: Option<f64>,
    /// Upper exit level (> 0).
    #[arg(long, requires = "exit_a")]
    pub exit_b: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct RulesCheckArgs {
    #[arg(long, value_name = "PATH")]
    pub rules: PathBuf,
    #[arg(long, value_name = "PATH", requires = "point")]
    pub model: Option<PathBuf>,
    /// Comma-separated feature values to classify.
    #[arg(long, allow_hyphen_values = true, requires = "model")]
    pub point: Option<String>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn load_input(path: &Path) -> Result<SampleSeries> {
    let header = detect_header(path)?;
    load_series(path, header)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Runs one subcommand and returns its summary line.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Normtest(a) => {
            check_alpha(a.alpha)?;
            let series = load_input(&a.input.input)?;
            let r = sw_test_increments(&series, a.feature, a.alpha)?;
            Ok(format!(
                "w={} p={} reject={} n={} alpha={}",
                f(r.w),
                f(r.p_value),
                r.reject_normality,
                r.n,
                f(r.alpha)
            ))
        }
        Command::Smooth(a) => {
            let series = load_input(&a.input.input)?;
            let smoothed = smooth_series(&series, a.feature)?;
            let name = &series.feature_names()[a.feature];
            let text = render_series(&smoothed.to_series(name)?);
            write(&a.out, &text)?;
            Ok(format!(
                "rows={} feature={} first={}",
                smoothed.len(),
                a.feature,
                f(smoothed.values[0])
            ))
        }
        Command::Basis(a) => {
            let series = load_input(&a.input.input)?;
            let smoothed = smooth_series(&series, a.feature)?;
            let basis = orthogonalize(&segment_vectors(&smoothed)?)?;
            write(&a.out, &basis.to_csv())?;
            let scaled = basis.entries.iter().filter(|e| e.fourier != 1.0).count();
            Ok(format!("segments={} scaled={scaled}", basis.len()))
        }
        Command::Train(a) => {
            let config = EbmConfig {
                layers: a.layers,
                t0: a.t0,
                cooling: a.alpha_cool,
                seed: a.seed,
            };
            config.validate()?;
            let series = load_input(&a.input.input)?;
            let rows = smooth_all(&series)?;
            let model = ebm_train(rows.rows(), &config)?;
            write(&a.out, &render_model(&model))?;
            Ok(format!(
                "layers={} d={} rows={} log_z={} seed={}",
                a.layers,
                model.input_dim(),
                model.train_rows,
                f(model.log_z),
                a.seed
            ))
        }
        Command::Classify(a) => {
            if !(0.0..1.0).contains(&a.tau) {
                return Err(Error::param(format!(
                    "--tau must lie in [0, 1), got {}",
                    a.tau
                )));
            }
            let series = load_input(&a.input.input)?;
            let model = read_model(&a.model)?;
            let k = target_class_count(series.n_features(), a.k)?;
            let rows = smooth_all(&series)?;
            let tree = build_tree(rows.rows(), &model, k, a.tau)?;
            let rules = extract_rules(&tree, rows.rows())?;
            write(&a.out, &render_rules(&rules))?;
            Ok(format!("rows={} k={k} leaves={}", rows.len(), rules.len()))
        }
        Command::Predict(a) => {
            if a.paths > 0 && a.paths_out.is_none() {
                return Err(Error::param("--paths requires --paths-out"));
            }
            if a.paths > 0 && a.steps == 0 {
                return Err(Error::param("--steps must be at least 1"));
            }
            let series = load_input(&a.input.input)?;
            let smoothed = smooth_series(&series, a.feature)?;
            let sigma2 = fit_sigma2(&smoothed)?;
            let mut result = forecast(&smoothed, a.horizon, sigma2)?;
            if a.paths > 0 {
                result = result.with_paths(a.steps, a.paths, a.seed)?;
            }
            write(&a.out, &result.to_csv())?;
            if let Some(p) = &a.paths_out {
                write(p, &result.paths_csv())?;
            }
            Ok(format!(
                "mean={} variance={} sigma2={} horizon={} paths={}",
                f(result.mean),
                f(result.variance),
                f(result.sigma2),
                f(result.horizon),
                a.paths
            ))
        }
        Command::Simulate(a) => match (a.exit_a, a.exit_b) {
            (Some(lo), Some(hi)) => {
                let dist = TwoPointDist::new(lo, hi)?;
                let est = skorokhod_exit(&dist, a.dt, a.trials, a.seed)?;
                Ok(format!(
                    "mean_exit={} sigma2={} hit_b={} p_b={} trials={}",
                    f(est.mean_exit_time),
                    f(dist.variance()),
                    f(est.hit_b_frequency),
                    f(dist.p_b()),
                    est.trials
                ))
            }
            _ => {
                let out = a
                    .out
                    .as_ref()
                    .ok_or_else(|| Error::param("--out is required"))?;
                let path = simulate_brownian(a.steps, a.dt, a.seed)?;
                write(out, &render_series(&path))?;
                let last = path.rows().last().map_or(0.0, |r| r[0]);
                Ok(format!(
                    "steps={} dt={} seed={} final={}",
                    a.steps,
                    f(a.dt),
                    a.seed,
                    f(last)
                ))
            }
        },
        Command::RulesCheck(a) => {
            let rules = read_rules(&a.rules)?;
            let s = rules.first().map_or(0, |r| r.bits.len());
            if let Some(r) = rules.iter().find(|r| r.bits.len() != s) {
                return Err(Error::param(format!(
                    "rule {} has {} bits, expected {s}",
                    r.class_id,
                    r.bits.len()
                )));
            }
            match (&a.model, &a.point) {
                (Some(model_path), Some(point)) => {
                    let model = read_model(model_path)?;
                    let row = point
                        .split(',')
                        .map(|c| {
                            c.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::param(format!("bad --point value `{c}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let energy = crate::ebm::ebm_energy(&model, &row)?;
                    let rule = classify_point(&rules, &model, &row)?;
                    Ok(format!(
                        "rules={} s={s} class={} energy={}",
                        rules.len(),
                        rule.class_id,
                        f(energy)
                    ))
                }
                _ => Ok(format!("rules={} s={s}", rules.len())),
            }
        }
    }
}
