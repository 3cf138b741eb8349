//! Synthetic inputs shared by the benchmarks.

use kgvec_core::graph::Graph;
use kgvec_core::labels::LabelIndex;
use kgvec_core::model::EmbeddingModel;
use kgvec_core::ntriples::Triple;
use kgvec_core::store::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random graph with `vertices` nodes, about `out_degree` edges each over 8 predicates.
pub fn random_graph(vertices: usize, out_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::with_capacity(vertices * out_degree);
    for v in 0..vertices {
        for _ in 0..rng.random_range(0..=2 * out_degree) {
            let p = rng.random_range(0..8);
            let o = rng.random_range(0..vertices);
            triples.push(Triple::iris(&format!("http://b/v{v}"), &format!("http://b/p{p}"), &format!("http://b/v{o}")));
        }
    }
    Graph::from_triples(triples.into_iter().map(Ok)).expect("synthetic triples are valid")
}

/// `tokens` × `dim` dataset with uniform random vectors and exact labels `w0`, `w1`, ...
pub fn random_dataset(tokens: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..tokens).map(|i| (format!("w{i}"), (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>()));
    let model = EmbeddingModel::from_rows(rows).expect("distinct tokens");
    Dataset::new("bench", model, LabelIndex::exact())
}
