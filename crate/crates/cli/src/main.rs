//! `rswalk`: graph conversion, walks, benchmarks and sampler verification.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or
//! input-data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rswalk::samplers::SamplerKind;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    VerifyFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rswalk", version, about = "Dynamic-graph random walks with parallel reservoir sampling")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat key=value file supplying defaults for the subcommand's flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log filter, e.g. warn, info, debug.
    #[arg(long, default_value = "info", value_name = "LEVEL")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a text edge list into the binary graph format.
    Convert(ConvertArgs),
    /// Write a random synthetic graph in the binary format.
    Generate(GenerateArgs),
    /// Run walks and write the sequences.
    Walk(WalkArgs),
    /// Time samplers over a grid of lane widths and sampling sizes (CSV).
    Bench(BenchArgs),
    /// Time one walk configuration and report throughput (CSV).
    BenchWalk(WalkArgs),
    /// Check a sampler's empirical distribution against the analytic one.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightGen {
    Uniform,
    Lognormal,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Replace edge weights with seeded random draws.
    #[arg(long, value_enum)]
    gen_weights: Option<WeightGen>,
    /// Log-normal sigma for --gen-weights lognormal.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Replace edge labels with seeded uniform labels in [0, N).
    #[arg(long, value_name = "N")]
    gen_labels: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    /// Text edge list: `src dst [weight] [label]` per line.
    input: PathBuf,
    output: PathBuf,
    /// Add the reverse of every edge.
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    symmetrize: bool,
    /// Renumber vertex ids densely in order of first appearance.
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    compact: bool,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    output: PathBuf,
    #[arg(long)]
    vertices: usize,
    #[arg(long)]
    edges: usize,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AppName {
    Deepwalk,
    Ppr,
    Node2vec,
    Metapath,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    /// Binary graph, or a text edge list.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "deepwalk")]
    app: AppName,
    /// Longest sequence, start vertex included.
    #[arg(long, default_value_t = rswalk::apps::DEFAULT_WALK_LENGTH)]
    length: usize,
    #[arg(long, default_value_t = rswalk::apps::DEFAULT_STOP_PROB)]
    stop_prob: f64,
    /// Node2vec return parameter a.
    #[arg(long, default_value_t = rswalk::apps::DEFAULT_RETURN_PARAM)]
    return_param: f64,
    /// Node2vec in-out parameter b.
    #[arg(long, default_value_t = rswalk::apps::DEFAULT_INOUT_PARAM)]
    inout_param: f64,
    /// Metapath label schema.
    #[arg(long, value_delimiter = ',', default_values_t = rswalk::apps::DEFAULT_SCHEMA)]
    schema: Vec<u8>,
    /// Ignore edge weights.
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    unweighted: bool,
    /// Number of queries; query i starts at vertex i mod |V|.
    #[arg(long)]
    queries: Option<usize>,
    /// One query per vertex (the default).
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    all_vertices: bool,
    /// Start every query at the highest-degree vertex; |V| queries unless
    /// --queries is given.
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    ppr_hub: bool,
    /// Result file (binary sequences).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the summary JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Small-unit lane width.
    #[arg(long, default_value_t = 32)]
    ks: usize,
    /// Large-unit lane width.
    #[arg(long, default_value_t = 256)]
    kb: usize,
    /// In-flight queries per worker.
    #[arg(long, default_value_t = 64)]
    local_pool: usize,
    /// Highest degree handled by the small units.
    #[arg(long, default_value_t = 1024)]
    degree_threshold: usize,
    /// Memory budget in bytes for graph plus result buffers.
    #[arg(long)]
    memory_budget: Option<u64>,
    /// Bytes per stored vertex id in the batch-size formula.
    #[arg(long, default_value_t = 4)]
    vertex_bytes: u64,
    #[arg(long, default_value = "zprs")]
    sampler: SamplerKind,
    /// Key random streams on (query, step) so output is schedule-independent.
    #[arg(long, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    replay: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values = ["zprs", "dprs"])]
    samplers: Vec<SamplerKind>,
    /// Lane widths.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 256])]
    k: Vec<usize>,
    /// Sampling sizes: numbers, `2^E`, or power-of-two ranges `2^6..2^20`.
    #[arg(long, value_delimiter = ',', default_values = ["2^6..2^20"])]
    sizes: Vec<String>,
    /// Log-normal sigmas; uniform weights when absent.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    /// Elements sampled per cell.
    #[arg(long, default_value_t = 1 << 24)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value = "zprs")]
    sampler: SamplerKind,
    /// `1,2,3`, `uniform:N[:SEED]` or `lognormal:N:SIGMA[:SEED]`.
    #[arg(long)]
    weights: String,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = rswalk::verify::DEFAULT_ATTEMPTS)]
    attempts: u32,
    /// Compare against a second sampler instead of the analytic law.
    #[arg(long)]
    against: Option<SamplerKind>,
    /// Negative control: replace the sampler with a weight-blind pick.
    #[arg(long, hide = true, num_args = 0..=1, require_equals = true, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    corrupt_uniform: bool,
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log)).init();
    let result = match &cli.command {
        Command::Convert(a) => commands::convert(a),
        Command::Generate(a) => commands::generate(a),
        Command::Walk(a) => commands::walk(a),
        Command::Bench(a) => commands::bench(a),
        Command::BenchWalk(a) => commands::bench_walk(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    match &e {
        CliError::Usage(m) => eprintln!("error: {m}"),
        CliError::Io(m) => eprintln!("error: {m}"),
        CliError::VerifyFailed => eprintln!("verification failed"),
    }
    ExitCode::from(e.exit_code())
}
