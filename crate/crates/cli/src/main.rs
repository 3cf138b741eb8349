//! `kgvec`: ingest → walk → train → serve / eval / query.

mod commands;
mod datasets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgvec_core::eval::GoldFormat;
use kgvec_core::train::Mode;
use kgvec_core::walker::{DEFAULT_DEPTH, LEXICAL_WALKS_PER_ENTITY};

use crate::datasets::ModelArgs;

#[derive(Debug, Parser)]
#[command(name = "kgvec", version, about = "Knowledge-graph embeddings from RDF random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse N-Triples (optionally .gz) into a graph snapshot.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Abort on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the random-walk corpus for every entity of a graph snapshot.
    Walk {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Walk attempts per entity (duplicates are dropped).
        #[arg(long, default_value_t = LEXICAL_WALKS_PER_ENTITY)]
        walks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train embeddings on a walk corpus. `.bin` outputs use the binary format.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        params: TrainArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the REST API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `bind` from the config file.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Spearman correlation of models against gold standards.
    Eval {
        /// Gold standard file; repeat for several.
        #[arg(long, required = true)]
        gold: Vec<PathBuf>,
        /// Format of each --gold (one value applies to all).
        #[arg(long, required = true)]
        format: Vec<GoldFormat>,
        #[command(flatten)]
        models: ModelArgs,
        /// Add a row scoring each pair by the sum over all models.
        #[arg(long)]
        combined: bool,
        /// Text report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Offline versions of the API calls.
    Query {
        #[command(flatten)]
        models: ModelArgs,
        /// Print the API's JSON instead of plain text.
        #[arg(long, global = true)]
        json: bool,
        #[command(subcommand)]
        query: Query,
    },
    /// ingest → walk → train in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
enum Query {
    /// Vectors of every token the concept resolves to.
    Vector {
        #[arg(long)]
        dataset: Option<String>,
        concept: String,
    },
    /// Max cosine over the concepts' vectors; 0 when either is unknown.
    Similarity {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Nearest tokens by cosine.
    Closest {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        concept: String,
    },
    /// Sum of similarities over all loaded models.
    Combined {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Rank t by cos(t, b - a + c).
    Analogy {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
}

/// Training flags; unset flags keep the config-file or built-in value.
#[derive(Debug, Clone, Default, Args)]
struct TrainArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long = "negative")]
    negatives: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    min_alpha: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
    /// Subsampling threshold; 0 disables.
    #[arg(long)]
    sample: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// More than one thread trains lock-free and is not reproducible.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "skip-gram" | "sg" => Ok(Mode::SkipGram),
        "cbow" => Ok(Mode::Cbow),
        other => Err(format!("unknown mode '{other}' (expected skip-gram or cbow)")),
    }
}

#[derive(Debug, Clone, Args)]
struct PipelineArgs {
    /// Declarative pipeline file (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    walks: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
