//! `s3w` command-line front end.

mod commands;
mod config;
mod generators;
mod grid;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use s3w::distance::Method;
use s3w::grad::LossKind;
use serde::{Deserialize, Serialize};

/// Failure with its process exit code: 2 for usage and configuration
/// errors, 3 for capacity errors at run time.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<s3w::Error> for CliError {
    fn from(e: s3w::Error) -> Self {
        let code = if matches!(e, s3w::Error::Capacity(_)) { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: s3w::Error| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: s3w::Error| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "s3w", version, about = "Spherical sliced Wasserstein distances, flows, studies and benchmarks")]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Globals {
    /// Global seed; every component derives its own stream from it.
    #[arg(long, global = true, env = "S3W_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "s3w-out")]
    pub out: PathBuf,
    /// Record wall-clock timings in the outputs (makes them non-reproducible).
    #[arg(long, global = true, default_value_t = false)]
    pub timings: bool,
    /// JSON file of option values; flags given on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance between two clouds.
    Dist(DistArgs),
    /// Gradient flow of a particle cloud towards a target.
    Flow(FlowArgs),
    /// Parameter sweeps.
    Study(StudyArgs),
    /// Runtime benchmarks.
    Bench(BenchArgs),
    /// Write a generated cloud as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Auto,
    Present,
    Absent,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DistArgs {
    /// s3w, ri_s3w, ari_s3w, max_s3w, sw or vsw.
    #[arg(long, default_value = "s3w", value_parser = parse_method)]
    pub method: Method,
    /// First cloud: CSV path or generator spec (e.g. vmf:mu=0,0,1:kappa=10:n=500).
    #[arg(long)]
    pub a: Option<String>,
    /// Second cloud.
    #[arg(long)]
    pub b: Option<String>,
    /// Projections (per rotation for ri_s3w/ari_s3w).
    #[arg(long = "L", default_value_t = 100)]
    pub n_projections: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Cap half-width around the north pole.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Rotations for ri_s3w/ari_s3w.
    #[arg(long, default_value_t = 10)]
    pub rotations: usize,
    /// Pool size for ari_s3w.
    #[arg(long, default_value_t = 100)]
    pub pool: usize,
    /// Candidate directions for max_s3w.
    #[arg(long, default_value_t = 1000)]
    pub candidates: usize,
    /// Share one projection set across rotations.
    #[arg(long, default_value_t = false)]
    pub reuse_projections: bool,
    /// Trailing weight column in CSV inputs.
    #[arg(long, value_enum, default_value = "auto")]
    pub weights: WeightMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum RetractionArg {
    Normalize,
    ExpMap,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FlowArgs {
    /// Target: icosa12[:kappa=..:n=..], another generator spec or a CSV path.
    #[arg(long, default_value = "icosa12")]
    pub target: String,
    /// s3w, ri_s3w, ari_s3w, sw or vsw.
    #[arg(long, default_value = "s3w", value_parser = parse_loss)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long = "L", default_value_t = 1000)]
    pub n_projections: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Rotations per step for ri_s3w/ari_s3w.
    #[arg(long, default_value_t = 1)]
    pub rotations: usize,
    /// Linear rotation ramp `from:to` over the run; overrides --rotations.
    #[arg(long)]
    pub rot_schedule: Option<String>,
    /// Rotation pool size for ari_s3w.
    #[arg(long, default_value_t = 1000)]
    pub pool: usize,
    /// Target mini-batch size; 0 uses the full target.
    #[arg(long, default_value_t = 0)]
    pub batch: usize,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "normalize")]
    pub retraction: RetractionArg,
    /// Particles drawn uniformly at start (ignored with --init).
    #[arg(long, default_value_t = 2400)]
    pub particles: usize,
    /// Initial cloud: CSV path or generator spec.
    #[arg(long)]
    pub init: Option<String>,
    /// Evaluate metrics every this many steps; 0 means the last step only.
    #[arg(long, default_value_t = 0)]
    pub eval_every: usize,
    /// Points per side in the exact W2 evaluation; 0 uses whole clouds.
    #[arg(long, default_value_t = 1000)]
    pub eval_subsample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Distortion,
    Eps,
    Kappa,
    Angle,
    Projections,
    Rotations,
    Pool,
    Samples,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct StudyArgs {
    /// distortion, eps, kappa, angle, projections, rotations, pool or samples.
    #[arg(value_enum)]
    pub kind: Option<StudyKind>,
    /// Grid a:b:n, a:b:log:n or a comma list [default: per study].
    #[arg(long)]
    pub grid: Option<String>,
    /// Repetitions per cell [default: per study].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Point pairs per repetition (distortion).
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    /// Comma-separated methods [default: per study].
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    /// Samples per measure [default: per study].
    #[arg(long)]
    pub n: Option<usize>,
    /// Projections [default: per study].
    #[arg(long = "L")]
    pub n_projections: Option<usize>,
    /// Rotations [default: 10].
    #[arg(long)]
    pub rotations: Option<usize>,
    /// Pool size [default: 100].
    #[arg(long)]
    pub pool: Option<usize>,
    /// Concentration [default: per study].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Sphere dimension [default: 2].
    #[arg(long)]
    pub d: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub p: Option<f64>,
    /// [default: 1e-6]
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "s3w,ri_s3w,ari_s3w")]
    pub methods: Vec<Method>,
    /// Samples per measure, a value or a grid [default: sweep 100:3000:6].
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Projections, a value or a grid [default: 200].
    #[arg(long = "L")]
    pub n_projections: Option<String>,
    /// Rotations, a value or a grid [default: 10].
    #[arg(long)]
    pub rotations: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub pool: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    /// Timed calls per cell after one warm-up call.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SampleArgs {
    /// Generator spec, e.g. uniform:d=2:n=500.
    pub spec: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

fn run() -> Result<(), CliError> {
    let matches = match Cli::command().args_override_self(true).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return Err(CliError { code: e.exit_code() as u8, message: String::new() });
        }
    };
    let mut cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::usage(e.to_string()))?;
    let resolved = config::resolve(&mut cli, &matches)?;
    if let Some(n) = cli.globals.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let g = &cli.globals;
    match &cli.command {
        Command::Dist(a) => commands::dist(g, a, resolved),
        Command::Flow(a) => commands::flow(g, a, resolved),
        Command::Study(a) => commands::study(g, a, resolved),
        Command::Bench(a) => commands::bench(g, a, resolved),
        Command::Sample(a) => commands::sample(g, a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
