//! Duplicate-free random walks and corpus generation.
//!
//! A walk alternates vertex and predicate tokens, `[v0, e1, v1, e2, v2, ...]`.
//! Depth counts tokens after the start vertex, so edges count towards it and
//! depth 8 means four hops and at most nine tokens.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::graph::{EdgeId, Graph, NodeId};
use crate::ntriples::escape_iri;

pub const DEFAULT_DEPTH: usize = 8;
/// Budget used for the lexical graphs (WordNet, Wiktionary).
pub const LEXICAL_WALKS_PER_ENTITY: usize = 500;
/// Budget used for the large instance graphs (DBpedia, WebIsALOD).
pub const LARGE_GRAPH_WALKS_PER_ENTITY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub depth: usize,
    /// Sampling attempts per start entity; duplicates are discarded afterwards.
    pub walks_per_entity: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { depth: DEFAULT_DEPTH, walks_per_entity: LARGE_GRAPH_WALKS_PER_ENTITY, seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !self.depth.is_multiple_of(2) {
            return Err(WalkError::Config(format!("depth must be even, got {}", self.depth)));
        }
        if self.walks_per_entity == 0 {
            return Err(WalkError::Config("walks_per_entity must be at least 1".into()));
        }
        Ok(())
    }
}

/// One walk as interned ids. Even positions are vertices, odd positions edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    tokens: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Vertex(NodeId),
    Edge(EdgeId),
}

impl Walk {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn start(&self) -> NodeId {
        NodeId(self.tokens[0])
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        self.tokens.iter().enumerate().map(|(i, &t)| {
            if i % 2 == 0 { Token::Vertex(NodeId(t)) } else { Token::Edge(EdgeId(t)) }
        })
    }

    /// `(source, edge, target)` hops along the walk.
    pub fn hops(&self) -> impl Iterator<Item = (NodeId, EdgeId, NodeId)> + '_ {
        self.tokens
            .windows(3)
            .step_by(2)
            .map(|w| (NodeId(w[0]), EdgeId(w[1]), NodeId(w[2])))
    }

    /// Space-separated IRI rendering, as written to the corpus.
    pub fn render(&self, graph: &Graph) -> String {
        let mut line = String::new();
        for (i, token) in self.tokens().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            match token {
                Token::Vertex(v) => line.push_str(&escape_iri(graph.node_iri(v))),
                Token::Edge(e) => line.push_str(&escape_iri(graph.edge_iri(e))),
            }
        }
        line
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one start entity, independent of the order entities are visited in.
pub fn entity_rng(seed: u64, node: NodeId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(u64::from(node.0))))
}

/// Samples `walks_per_entity` walks from `start` and keeps the distinct ones
/// in first-seen order.
pub fn generate_walks(graph: &Graph, start: NodeId, config: &WalkConfig) -> Vec<Walk> {
    let mut rng = entity_rng(config.seed, start);
    let mut seen = HashSet::new();
    let mut walks = Vec::new();
    let max_tokens = config.depth + 1;
    for _ in 0..config.walks_per_entity {
        let mut tokens = Vec::with_capacity(max_tokens);
        tokens.push(start.0);
        let mut current = start;
        while tokens.len() < max_tokens {
            let out = graph.neighbors(current);
            if out.is_empty() {
                break;
            }
            let (edge, next) = out[rng.random_range(0..out.len())];
            tokens.push(edge.0);
            tokens.push(next.0);
            current = next;
        }
        let walk = Walk { tokens };
        if seen.insert(walk.clone()) {
            walks.push(walk);
        }
    }
    walks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusStats {
    pub entities: usize,
    pub walks: usize,
    pub tokens: usize,
    /// Sampling attempts made; `walks` is what survived deduplication.
    pub attempts: usize,
}

/// Entities rendered per parallel batch before being written in order.
const BATCH: usize = 512;

/// Writes one line per walk for every vertex of the graph.
///
/// Entities are processed in parallel batches, but each batch is written in
/// vertex order, so the corpus is byte-identical for any thread count.
pub fn generate_corpus<W: Write>(graph: &Graph, config: &WalkConfig, mut sink: W) -> Result<CorpusStats, WalkError> {
    config.validate()?;
    let node_tokens: Vec<String> = graph.nodes().map(|v| escape_iri(graph.node_iri(v))).collect();
    let edge_tokens: Vec<String> =
        (0..graph.edge_label_count() as u32).map(|e| escape_iri(graph.edge_iri(EdgeId(e)))).collect();

    let mut stats = CorpusStats::default();
    let nodes: Vec<NodeId> = graph.nodes().collect();
    for batch in nodes.chunks(BATCH) {
        let rendered: Vec<(String, usize, usize)> = batch
            .par_iter()
            .map(|&start| {
                let walks = generate_walks(graph, start, config);
                let mut text = String::new();
                let mut tokens = 0;
                for walk in &walks {
                    for (i, token) in walk.tokens().enumerate() {
                        if i > 0 {
                            text.push(' ');
                        }
                        text.push_str(match token {
                            Token::Vertex(v) => &node_tokens[v.0 as usize],
                            Token::Edge(e) => &edge_tokens[e.0 as usize],
                        });
                    }
                    text.push('\n');
                    tokens += walk.len();
                }
                (text, walks.len(), tokens)
            })
            .collect();
        for (text, walks, tokens) in rendered {
            if let Err(source) = sink.write_all(text.as_bytes()) {
                return Err(WalkError::Sink { entities: stats.entities, walks: stats.walks, tokens: stats.tokens, source });
            }
            stats.entities += 1;
            stats.walks += walks;
            stats.tokens += tokens;
            stats.attempts += config.walks_per_entity;
        }
    }
    sink.flush().map_err(|source| WalkError::Sink {
        entities: stats.entities,
        walks: stats.walks,
        tokens: stats.tokens,
        source,
    })?;
    Ok(stats)
}
