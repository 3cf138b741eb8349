use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed statement at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("graph snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("invalid walk configuration: {0}")]
    Config(String),
    #[error("corpus write failed after {entities} entities, {walks} walks, {tokens} tokens: {source}")]
    Sink {
        entities: usize,
        walks: usize,
        tokens: usize,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("no trainable tokens")]
    EmptyVocabulary,
    #[error("non-finite loss {loss} in epoch {epoch} at sentence {sentence} (center {center}, context {context}, alpha {alpha})")]
    NonFinite {
        loss: f64,
        epoch: usize,
        sentence: usize,
        center: String,
        context: String,
        alpha: f64,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("binary model: {0}")]
    Binary(String),
    #[error("label index line {line}: {message}")]
    Labels { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("unknown dataset '{0}'")]
    DatasetNotFound(String),
    #[error("duplicate dataset '{0}'")]
    DuplicateDataset(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown gold standard format '{0}'")]
    UnknownFormat(String),
    #[error("gold standard row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("gold standard header: {0}")]
    Header(String),
    #[error("gold standard needs at least 2 pairs, found {0}")]
    TooFewPairs(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: zero rank variance")]
    UndefinedCorrelation,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: io::Error,
    },
}
