//! File-to-file stages: ingest → walk → train.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GraphError, PipelineError};
use crate::graph::{Graph, GraphStats};
use crate::model::{EmbeddingModel, ModelFormat};
use crate::ntriples::{open_input, NTriplesReader, Strictness};
use crate::train::{train, Corpus, TrainingConfig};
use crate::walker::{generate_corpus, CorpusStats, WalkConfig};

fn open(path: &Path) -> Result<File, PipelineError> {
    File::open(path).map_err(|source| PipelineError::File { path: path.to_owned(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|source| PipelineError::File { path: path.to_owned(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestReport {
    pub stats: GraphStats,
    /// Malformed lines skipped in lenient mode.
    pub skipped_lines: usize,
}

/// Parses an N-Triples file (gzip by extension) into a graph.
pub fn ingest_graph(input: &Path, strictness: Strictness) -> Result<(Graph, IngestReport), PipelineError> {
    let reader = open_input(input).map_err(|source| PipelineError::File { path: input.to_owned(), source })?;
    let mut triples = NTriplesReader::new(reader, strictness);
    let graph = Graph::from_triples(triples.by_ref())?;
    let report = IngestReport { stats: graph.stats(), skipped_lines: triples.skipped() };
    Ok((graph, report))
}

pub fn ingest(input: &Path, strictness: Strictness, output: &Path) -> Result<IngestReport, PipelineError> {
    let (graph, report) = ingest_graph(input, strictness)?;
    graph.write_snapshot(create(output)?).map_err(GraphError::Io)?;
    Ok(report)
}

pub fn load_graph(path: &Path) -> Result<Graph, PipelineError> {
    Ok(Graph::read_snapshot(BufReader::new(open(path)?))?)
}

pub fn walk(graph: &Path, config: &WalkConfig, corpus: &Path) -> Result<CorpusStats, PipelineError> {
    let graph = load_graph(graph)?;
    Ok(generate_corpus(&graph, config, create(corpus)?)?)
}

pub fn load_corpus(path: &Path, min_count: u64) -> Result<Corpus, PipelineError> {
    Ok(Corpus::from_reader(BufReader::with_capacity(1 << 20, open(path)?), min_count)?)
}

/// Trains on a corpus file and writes the model in the format its extension selects.
pub fn train_file(corpus: &Path, config: &TrainingConfig, output: &Path) -> Result<EmbeddingModel, PipelineError> {
    let corpus = load_corpus(corpus, config.min_count)?;
    let model = train(&corpus, config)?;
    model
        .save(output, ModelFormat::from_path(output))
        .map_err(|source| PipelineError::File { path: output.to_owned(), source })?;
    Ok(model)
}

/// Declarative end-to-end configuration, typically read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Directory receiving `graph.kgg`, `corpus.txt`, `model.bin` and `model.txt`.
    pub output_dir: PathBuf,
    /// Seeds both walk generation and training.
    pub seed: u64,
    pub strict: bool,
    pub walk: WalkConfig,
    pub train: TrainingConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            output_dir: PathBuf::from("."),
            seed: 1,
            strict: false,
            walk: WalkConfig::default(),
            train: TrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutputs {
    pub graph: PathBuf,
    pub corpus: PathBuf,
    pub model_binary: PathBuf,
    pub model_text: PathBuf,
    pub ingest: IngestReport,
    pub corpus_stats: CorpusStats,
    pub vocab_size: usize,
}

pub fn run(config: &PipelineConfig) -> Result<PipelineOutputs, PipelineError> {
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::File { path: dir.clone(), source })?;
    let graph_path = dir.join("graph.kgg");
    let corpus_path = dir.join("corpus.txt");
    let binary = dir.join("model.bin");
    let text = dir.join("model.txt");

    let strictness = if config.strict { Strictness::Strict } else { Strictness::Lenient };
    let ingest_report = ingest(&config.input, strictness, &graph_path)?;
    let walk_config = WalkConfig { seed: config.seed, ..config.walk };
    let corpus_stats = walk(&graph_path, &walk_config, &corpus_path)?;
    let train_config = TrainingConfig { seed: config.seed, ..config.train.clone() };
    let model = train_file(&corpus_path, &train_config, &binary)?;
    model.save(&text, ModelFormat::Text).map_err(|source| PipelineError::File { path: text.clone(), source })?;

    Ok(PipelineOutputs {
        graph: graph_path,
        corpus: corpus_path,
        model_binary: binary,
        model_text: text,
        ingest: ingest_report,
        corpus_stats,
        vocab_size: model.len(),
    })
}
