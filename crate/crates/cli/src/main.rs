//! `amrfoil`: parse and manipulate AMR graphs, induce foil datasets and
//! benchmark embedding models on them.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use amrfoil::transforms::ManipulationType;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "amrfoil", version, about = "AMR-based foil generation and embedding benchmarking")]
pub struct Cli {
    /// Configuration file (TOML, or JSON with a .json extension)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Read PENMAN graphs and print them normalized
    Parse(ParseArgs),
    /// Apply a manipulation to a sentence or a PENMAN graph
    Transform(TransformArgs),
    /// Build foil records from paraphrase pairs
    Induce(InduceArgs),
    /// Score embedding models on foil records
    Evaluate(EvaluateArgs),
    /// Print retained-record statistics per dataset
    Stats(StatsArgs),
    /// Emit grouped-bar data (per-type TACC) from evaluation reports
    PlotData(PlotDataArgs),
    /// Spearman correlation between two model rankings
    CompareRankings(CompareArgs),
    /// Send requests to the live model server and store the answers as fixtures
    RecordFixtures(RecordArgs),
}

#[derive(Args, Debug)]
pub struct BackendArgs {
    /// Model server base URL (overrides config and AMRFOIL_BACKEND_URL)
    #[arg(long, value_name = "URL")]
    pub backend_url: Option<String>,
    /// Replay responses from a fixture file instead of calling the server
    #[arg(long, value_name = "FILE", conflicts_with = "backend_url")]
    pub fixtures: Option<PathBuf>,
    /// Response cache directory
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Append every backend response to this fixture file
    #[arg(long, value_name = "FILE")]
    pub record: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// PENMAN file with blank-line separated graphs (default: stdin)
    pub input: Option<PathBuf>,
    /// Drop :wiki attributes
    #[arg(long)]
    pub strip_wiki: bool,
    /// Print flat triples instead of PENMAN
    #[arg(long)]
    pub triples: bool,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// Sentence to parse, manipulate and regenerate
    #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
    pub sentence: Option<String>,
    /// PENMAN graph file to manipulate offline (first graph is used)
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Manipulations to choose from, comma separated (default: all)
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub manip: Vec<ManipulationType>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// WordNet dictionary directory (needed for AR and HS)
    #[arg(long, value_name = "DIR")]
    pub wordnet: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FilterPreset {
    /// Contradiction with probability in (0.90, 1.0]
    Main,
    /// Neutral with probability in (0.50, 0.80]
    NeutralAblation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Paws,
    Gptp,
    Custom,
}

#[derive(Args, Debug)]
pub struct InduceArgs {
    /// Paraphrase pairs: .tsv (PAWS layout), .csv (GPTP layout) or JSON lines
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
    /// Dataset name attached to pairs that do not carry one
    #[arg(long, value_enum, default_value = "custom")]
    pub dataset: DatasetArg,
    /// NLI filter (default: from config, else main)
    #[arg(long, value_enum)]
    pub filter: Option<FilterPreset>,
    /// Random seed (default: from config, else 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Manipulations to choose from, comma separated (default: from config)
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub allowed: Vec<ManipulationType>,
    /// Pairs processed concurrently
    #[arg(long)]
    pub workers: Option<usize>,
    /// WordNet dictionary directory (needed for AR and HS)
    #[arg(long, value_name = "DIR")]
    pub wordnet: Option<PathBuf>,
    /// Output file for foil records (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write per-pair failures with reason codes (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub failures: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Foil record files (JSON lines); records are grouped by their dataset
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Embedding model ids, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    /// Output directory for reports and CSV tables
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Foil record files (JSON lines)
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Print JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct PlotDataArgs {
    /// Report JSON files, or directories containing them
    #[arg(long, value_name = "PATH", required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    /// Output CSV file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// CSV `model,rank` (lower is better) or `model,<score>` (higher is better)
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Second ranking, same layout
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
}

#[derive(Args, Debug)]
pub struct RecordArgs {
    /// Requests as JSON lines of {"endpoint": ..., "request": {...}}
    #[arg(long, value_name = "FILE")]
    pub requests: PathBuf,
    /// Fixture file to append to
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Model server base URL (overrides config and AMRFOIL_BACKEND_URL)
    #[arg(long, value_name = "URL")]
    pub backend_url: Option<String>,
}

fn parse_kind(s: &str) -> Result<ManipulationType, String> {
    s.parse().map_err(|e: amrfoil::transforms::TransformError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
