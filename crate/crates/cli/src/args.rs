use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "alasso", version, about = "Sampling and importance-sampling tools for the augmented Lasso estimator")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "ALASSO_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Simulate a dataset with an equicorrelated Gaussian design.
    #[command(args_override_self = true)]
    GenData(GenDataArgs),
    /// Sample (β̂, S) from its joint distribution.
    #[command(args_override_self = true)]
    SampleJoint(SampleJointArgs),
    /// Sample (β̂, S) given the active set.
    #[command(args_override_self = true)]
    SampleCond(SampleCondArgs),
    /// Importance-sampling p-value for one test.
    #[command(args_override_self = true)]
    Pvalue(PvalueArgs),
    /// Importance-sampling p-values for several tests from one trial sample.
    #[command(args_override_self = true)]
    PvalueMulti(PvalueMultiArgs),
    /// Summaries, autocorrelation and histogram of a chain.
    #[command(args_override_self = true)]
    Diagnose(DiagnoseArgs),
    /// Posterior decision sample next to a sampling-distribution draw.
    #[command(args_override_self = true)]
    PosteriorCheck(PosteriorCheckArgs),
    /// Log-spaced λ grid from λ_max downwards.
    #[command(args_override_self = true)]
    LambdaGrid(LambdaGridArgs),
}

pub const SUBCOMMANDS: &[&str] =
    &["gen-data", "sample-joint", "sample-cond", "pvalue", "pvalue-multi", "diagnose", "posterior-check", "lambda-grid"];

#[derive(Debug, Args, Serialize)]
pub struct DesignArgs {
    /// Design matrix X (n rows, p columns).
    #[arg(long)]
    pub x: PathBuf,
    /// Penalty weights w (p values); all ones when omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Gaussian,
    T,
    Elliptical,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mls,
    Direct,
    Rdmls,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    L1,
    Linf,
    AbsCoord,
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Common correlation between design columns.
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Data and noise model shared by the samplers.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    /// Response y (n values).
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub lambda: f64,
    /// Coefficients to sample at: lasso, ols, zero or a CSV file.
    #[arg(long, default_value = "lasso")]
    pub beta: String,
    /// Noise variance; estimated from the least-squares residuals when omitted.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum, default_value_t = ErrorKind::Gaussian)]
    pub error: ErrorKind,
    /// Residual bootstraps for the elliptical model.
    #[arg(long, default_value_t = 10_000)]
    pub boot: usize,
    /// Radial bins for the elliptical model.
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 5500)]
    pub iters: usize,
    #[arg(long, default_value_t = 500)]
    pub burnin: usize,
    /// Chain CSV; a JSON sidecar is written next to it.
    #[arg(long, default_value = "chain.csv")]
    pub out: PathBuf,
    /// Run manifest (defaults to manifest.json beside the output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleJointArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long, value_enum, default_value_t = Method::Mls)]
    pub method: Method,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleCondArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Active set to condition on, 1-based and comma separated.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    pub active: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatArgs {
    #[arg(long, value_enum, default_value_t = StatKind::L1)]
    pub stat: StatKind,
    /// Coordinate (1-based) for --stat abs-coord.
    #[arg(long)]
    pub coord: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct NullArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    /// Null coefficients: zero or a CSV file.
    #[arg(long, default_value = "zero")]
    pub null_beta: String,
    /// Noise variance under the null.
    #[arg(long)]
    pub sigma2: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub stat: StatArgs,
    /// Trial draws.
    #[arg(long = "L", default_value_t = 5000)]
    pub l: usize,
    /// Variance inflation of the trial distribution.
    #[arg(long = "M-dagger", default_value_t = 5.0)]
    pub m_dagger: f64,
    /// Pilot draws used to tune λ†.
    #[arg(long = "L-pilot", default_value_t = 100)]
    pub l_pilot: usize,
    /// Fix λ† instead of tuning it.
    #[arg(long)]
    pub lambda_dagger: Option<f64>,
    /// Fix σ†² (defaults to M†σ²).
    #[arg(long)]
    pub sigma2_dagger: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "pvalue.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PvalueArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub null: NullArgs,
    #[arg(long)]
    pub lambda_star: f64,
    /// Observed statistic; computed from --y when omitted.
    #[arg(long)]
    pub t_star: Option<f64>,
    /// Observed response.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Independent repetitions, reported with their cv.
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PvalueMultiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub null: NullArgs,
    /// Comma-separated λ* values, one per test.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, required = true)]
    pub lambda_star: Vec<f64>,
    /// Comma-separated observed statistics, one per test.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    pub t_star: Vec<f64>,
    /// Comma-separated response files, one per test (instead of --t-star).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    pub y: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub chain: PathBuf,
    /// Log importance weights, one per row of the chain.
    #[arg(long)]
    pub log_weights: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub stat: StatArgs,
    /// Cost of one draw relative to a direct draw.
    #[arg(long, default_value_t = 1.0)]
    pub cost_ratio: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, default_value = "diagnostics.json")]
    pub out: PathBuf,
    /// Histogram CSV of the statistic (center, mass).
    #[arg(long, default_value = "histogram.csv")]
    pub hist: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PosteriorCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// gaussian or t.
    #[arg(long, value_enum, default_value_t = ErrorKind::Gaussian)]
    pub error: ErrorKind,
    #[arg(long = "L", default_value_t = 5000)]
    pub l: usize,
    #[arg(long)]
    pub seed: u64,
    /// Posterior decisions in chain CSV format.
    #[arg(long, default_value = "posterior.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "posterior_check.json")]
    pub report: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LambdaGridArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub len: usize,
    /// Smallest λ as a fraction of λ_max.
    #[arg(long, default_value_t = 0.01)]
    pub ratio: f64,
    #[arg(long, default_value = "lambda_grid.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
