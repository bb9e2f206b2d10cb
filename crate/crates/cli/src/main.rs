mod commands;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Job-shop scheduling through time-indexed QUBOs.
#[derive(Debug, Parser)]
#[command(name = "qjsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random instance from a family.
    Gen(GenArgs),
    /// Build the QUBO for one timespan.
    Compile(CompileArgs),
    /// Report processing windows before and after shaving.
    Shave(ShaveArgs),
    /// Minor-embed a QUBO into a Chimera graph.
    Embed(EmbedArgs),
    /// Answer one decision query or run the full optimization loop.
    Solve(Box<SolveArgs>),
    /// Solve a batch of family members exactly and fit the makespan model.
    Precharacterize(PrecharArgs),
    /// Time the branch-and-bound optimizer over a batch of instances.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, serde::Serialize)]
struct FamilyArgs {
    #[arg(long)]
    jobs: usize,
    #[arg(long)]
    machines: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long)]
    pmin: u32,
    #[arg(long)]
    pmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum FormulationArg {
    Penalties,
    Rewards,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
struct PenaltyArgs {
    /// `eta,alpha,beta`; integers or fractions such as `1/2`.
    #[arg(long, default_value = "1,1,1")]
    penalties: String,
    /// Weight of the precedence reward in the rewards formulation.
    #[arg(long, default_value = "1")]
    eta_prime: String,
    /// Discrimination depth.
    #[arg(long = "K", default_value_t = 0)]
    k: u32,
    #[arg(long, default_value = "1/16")]
    epsilon: String,
    /// Prune with shaving windows instead of simple windows.
    #[arg(long)]
    shave: bool,
}

#[derive(Debug, Args)]
struct CompileArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    timespan: u32,
    #[arg(long, value_enum, default_value_t = FormulationArg::Penalties)]
    mode: FormulationArg,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ShaveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    timespan: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
struct EmbedOpts {
    /// `size,cell[,dead-qubit-file]`.
    #[arg(long, default_value = "8,4")]
    hardware: String,
    /// Embedding time limit in seconds.
    #[arg(long, default_value_t = 120.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 8)]
    attempts: usize,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    qubo: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    opts: EmbedOpts,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum SolveMode {
    Decision,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Exhaustive,
    Sa,
    Embedded,
    /// Classical branch-and-bound; `K = 0` only.
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum BoundsArg {
    Zero,
    Trivial,
    Icp,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
struct SamplerArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Exhaustive)]
    backend: BackendArg,
    #[arg(long, default_value_t = 1000)]
    reads: u64,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Modeled annealing time per read, microseconds.
    #[arg(long, default_value_t = 20.0)]
    anneal_time: f64,
    /// Ferromagnetic chain coupling for the embedded backend.
    #[arg(long, default_value_t = 1.0)]
    jf: f64,
    /// Derive the read count from a target confidence `r0`.
    #[arg(long)]
    confidence: Option<f64>,
    /// Per-read success rate assumed with `--confidence`.
    #[arg(long, default_value_t = 0.05)]
    success_rate: f64,
    /// Largest QUBO the exhaustive backend accepts.
    #[arg(long, default_value_t = qjsp::sampler::DEFAULT_EXHAUSTIVE_CAP)]
    max_vars: usize,
    #[command(flatten)]
    embed: EmbedOpts,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value_t = SolveMode::Decision)]
    mode: SolveMode,
    /// Compiled QUBO (decision mode); the instance is read from its header.
    #[arg(long, conflicts_with = "instance")]
    qubo: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Timespan for decision mode with `--instance`.
    #[arg(long)]
    timespan: Option<u32>,
    #[arg(long, value_enum, default_value_t = FormulationArg::Penalties)]
    formulation: FormulationArg,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long, value_enum, default_value_t = BoundsArg::Icp)]
    bounds: BoundsArg,
    /// Makespan model JSON written by `precharacterize`; defaults to the
    /// fitted formula for square full-coverage families, flat otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    max_queries: usize,
    /// Write the sample set of a decision query as CSV.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PrecharArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Write the `makespan,count` histogram as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Input errors, bad flags and unreadable files.
const EXIT_INPUT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Compile(a) => commands::compile(a),
        Command::Shave(a) => commands::shave(a),
        Command::Embed(a) => commands::embed(a),
        Command::Solve(a) => commands::solve(*a),
        Command::Precharacterize(a) => commands::precharacterize(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
