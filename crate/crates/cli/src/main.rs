//! `osstar`: exact sampling and decoding by adaptive rejection.

mod gm_cmd;
mod hmm_cmd;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use osstar_core::CostModel;
use osstar_gm::PolicyKind;

#[derive(Parser)]
#[command(name = "osstar", version, about = "Exact sampling and optimization by adaptive rejection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keypad decoding with an n-gram language model.
    #[command(subcommand)]
    Hmm(HmmCommand),
    /// Pairwise graphical models.
    #[command(subcommand)]
    Gm(GmCommand),
    /// Generate input files.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run small oracle checks and print a pass/fail table.
    Selftest,
}

#[derive(Subcommand)]
enum HmmCommand {
    /// Find the most probable sentence.
    Decode(HmmArgs),
    /// Draw exact samples of the sentence.
    Sample(HmmArgs),
}

#[derive(Args)]
pub struct HmmArgs {
    /// ARPA language model.
    #[arg(long)]
    pub arpa: PathBuf,
    /// Vocabulary file, one lowercase word per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Whitespace-separated keypad digit strings, one per token.
    #[arg(long)]
    pub obs: String,
    /// Use the model truncated to this order.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=5))]
    pub order: Option<u64>,
    /// Trials per refinement when sampling.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    #[arg(long, default_value_t = 0.2, value_parser = parse_fraction)]
    pub ar_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial metrics CSV.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Probability mass given to one-adjacent-key typing errors.
    #[arg(long, default_value_t = 0.0, value_parser = parse_fraction_closed)]
    pub epsilon: f64,
    /// Samples to draw once the acceptance threshold is reached.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_trials: usize,
}

#[derive(Subcommand)]
enum GmCommand {
    /// Draw exact samples.
    Sample(GmArgs),
    /// Find the most probable configuration.
    Optimize(GmArgs),
    /// Compare refinement policies on a fixed refinement budget.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model in JSON form.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Random Ising grid, e.g. 4x4; its couplings are drawn from the run seed.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
}

#[derive(Args)]
pub struct GmArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Standard deviation of Ising couplings and fields.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value = "ii")]
    pub policy: PolicyKind,
    /// Give up after this many refinements.
    #[arg(long, default_value_t = 100_000)]
    pub refinements: usize,
    #[arg(long, default_value_t = 0.2, value_parser = parse_fraction)]
    pub ar_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Samples to draw once the acceptance threshold is reached.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_trials: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CostArg {
    /// One unit per trial step and per refinement work unit.
    Injected,
    WallClock,
}

impl CostArg {
    pub fn model(self) -> CostModel {
        match self {
            CostArg::Injected => CostModel::default(),
            CostArg::WallClock => CostModel::WallClock,
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Policy to run; all four when omitted.
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    #[arg(long, default_value_t = 40)]
    pub refinements: usize,
    /// Trials between refinements for policies iii and iv.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    /// Sample count in the projected total time.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Runs per policy, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CostArg::Injected)]
    pub cost: CostArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_trials: usize,
    /// CSV path; with several runs the policy and seed are added to the name.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random Ising grid as model JSON.
    Ising {
        #[arg(long, value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got {s:?}"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if r == 0 || c == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((r, c))
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn parse_fraction_closed(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Hmm(HmmCommand::Decode(args)) => hmm_cmd::decode(&args).map(|_| true),
        Command::Hmm(HmmCommand::Sample(args)) => hmm_cmd::sample(&args).map(|_| true),
        Command::Gm(GmCommand::Sample(args)) => gm_cmd::sample(&args).map(|_| true),
        Command::Gm(GmCommand::Optimize(args)) => gm_cmd::optimize(&args).map(|_| true),
        Command::Gm(GmCommand::Bench(args)) => gm_cmd::bench(&args).map(|_| true),
        Command::Gen(GenCommand::Ising { grid, sigma, seed, out }) => gm_cmd::gen_ising(grid, sigma, seed, out.as_deref()).map(|_| true),
        Command::Selftest => Ok(selftest::run()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
