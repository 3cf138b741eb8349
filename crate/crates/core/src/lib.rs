//! Knowledge-graph embeddings from RDF random walks.
//!
//! The crate covers the whole offline path: N-Triples ingestion into an
//! interned graph ([`graph`]), duplicate-free random-walk corpora
//! ([`walker`]), skip-gram negative-sampling training ([`train`], [`sgns`]),
//! and the query side used by the REST server ([`store`], [`labels`]) and the
//! gold-standard evaluation ([`eval`]).

pub mod error;
pub mod eval;
pub mod graph;
pub mod labels;
pub mod model;
pub mod ntriples;
pub mod pipeline;
pub mod sgns;
pub mod store;
pub mod train;
pub mod walker;

pub use error::{EvalError, GraphError, ModelError, ParseError, PipelineError, StoreError, TrainError, WalkError};
pub use eval::{evaluate, spearman, EvalResult, GoldFormat, GoldStandard, Report, Scorer};
pub use graph::{EdgeId, Graph, GraphStats, NodeId};
pub use labels::{LabelIndex, Normalization};
pub use model::{EmbeddingModel, ModelFormat};
pub use ntriples::{Strictness, Triple};
pub use store::{cosine, Dataset, DatasetSpec, ModelStore, Neighbor, Similarity};
pub use train::{train, Corpus, Mode, TrainingConfig, Vocabulary};
pub use walker::{generate_corpus, generate_walks, CorpusStats, Walk, WalkConfig};
