use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xtreat::sim::DgpSpec;
use xtreat::{Boundary, KernelShape};

mod commands;
mod output;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "xtreat", version, about = "Extreme quantile and tail-mean effects of a continuous treatment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-(t, α) table of intermediate, extreme and naive quantiles, γ̂ and tail means.
    Estimate(EstimateArgs),
    /// EQTE and EATE confidence bands against a baseline treatment level.
    Effects(EffectsArgs),
    /// Repeated estimation on a simulated design (boxplot data).
    Simulate(SimulateArgs),
    /// Empirical coverage of the EQTE and EATE bands on a simulated design.
    Coverage(CoverageArgs),
    /// Box-Cox normality search and exponential Q-Q tail check.
    Diagnose(DiagnoseArgs),
    /// Draw a dataset from a simulation design and write it as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaChoice {
    Hill,
    Pickands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightChoice {
    Column,
    Kernel,
    Oracle,
}

fn parse_kernel(s: &str) -> Result<KernelShape, String> {
    s.parse().map_err(|e: xtreat::Error| e.to_string())
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: xtreat::Error| e.to_string())
}

fn parse_dgp(s: &str) -> Result<DgpSpec, String> {
    s.parse().map_err(|e: xtreat::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EstimationArgs {
    /// Treatment levels, on the original treatment scale.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0.999")]
    pub alpha: Vec<f64>,
    #[arg(long, value_parser = parse_kernel, default_value = "epanechnikov")]
    pub kernel: KernelShape,
    #[arg(long, value_parser = parse_boundary, default_value = "reflect")]
    pub boundary: Boundary,
    /// Bandwidth on the unit treatment scale; defaults to the candidate-interval midpoint.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Tail sample size; selected by the distance criterion when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "J", default_value_t = xtreat::tail::DEFAULT_J)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = GammaChoice::Hill)]
    pub gamma_method: GammaChoice,
    /// Defaults to the weight column when present, kernel-ratio otherwise.
    #[arg(long, value_enum)]
    pub weights: Option<WeightChoice>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Keep treatments as given instead of mapping them onto [0, 1].
    #[arg(long)]
    pub no_rescale: bool,
    /// Append the design's true values (simulated data only).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_parser = parse_dgp, default_value = "dgp1")]
    pub dgp: DgpSpec,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EffectsArgs {
    #[command(flatten)]
    pub base: EstimateArgs,
    /// Baseline treatment level t₁ (original scale); defaults to the lowest observed.
    #[arg(long)]
    pub baseline_t: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Number of ϱ points in [Δ₀α, α].
    #[arg(long, default_value_t = 20)]
    pub rho_points: usize,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_parser = parse_dgp, default_value = "dgp1")]
    pub dgp: DgpSpec,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.999)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "epanechnikov")]
    pub kernel: KernelShape,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "J", default_value_t = xtreat::tail::DEFAULT_J)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = GammaChoice::Hill)]
    pub gamma_method: GammaChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = WeightChoice::Oracle)]
    pub weights: WeightChoice,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = WeightChoice::Kernel)]
    pub weights: WeightChoice,
    #[arg(long, default_value_t = 0.0)]
    pub baseline_t: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = parse_dgp, default_value = "dgp1")]
    pub dgp: DgpSpec,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

fn init(quiet: bool) {
    // replication loops repeat the same per-dataset warnings hundreds of times
    let level = if quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Ok(v) = std::env::var("XTREAT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                xtreat::par::init_threads(n);
            }
            _ => log::warn!("ignoring XTREAT_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    init(matches!(cli.command, Command::Simulate(_) | Command::Coverage(_)));
    let res = match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Effects(a) => commands::effects(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Coverage(a) => commands::coverage(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Sample(a) => commands::sample(&a),
    };
    match res {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
