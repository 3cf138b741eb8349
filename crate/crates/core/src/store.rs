//! Loaded datasets and the similarity, neighbor, combined and analogy queries.
//!
//! Everything here is read-only after construction, so a [`ModelStore`] can
//! be shared behind an `Arc` by any number of concurrent readers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, StoreError};
use crate::labels::{LabelIndex, Normalization};
use crate::model::EmbeddingModel;

fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

fn norm64(a: &[f32]) -> f64 {
    dot64(a, a).sqrt()
}

fn ratio(dot: f64, norms: f64) -> f64 {
    if norms == 0.0 {
        0.0
    } else {
        (dot / norms).clamp(-1.0, 1.0) + 0.0
    }
}

/// Cosine similarity, accumulated in f64. Zero vectors score 0.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, StoreError> {
    if u.len() != v.len() {
        return Err(StoreError::DimensionMismatch(u.len(), v.len()));
    }
    Ok(ratio(dot64(u, v), norm64(u) * norm64(v)))
}

/// Where a dataset's files live; shared by the server config and the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub model: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub normalization: Option<Normalization>,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset, ModelError> {
        let model = EmbeddingModel::load(&self.model)?;
        let rule = self
            .normalization
            .unwrap_or(if self.labels.is_some() { Normalization::Sidecar } else { Normalization::Exact });
        let labels = match rule {
            Normalization::Exact => LabelIndex::exact(),
            Normalization::IriSuffix => LabelIndex::iri_suffix(&model),
            Normalization::Sidecar => {
                let path = self.labels.as_ref().ok_or_else(|| ModelError::Labels {
                    line: 0,
                    message: format!("dataset '{}' uses sidecar labels but no label file is set", self.name),
                })?;
                LabelIndex::sidecar(&model, BufReader::new(File::open(path)?))?
            }
        };
        Ok(Dataset::new(self.name.clone(), model, labels))
    }
}

/// A model, its label index and a precomputed norm per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    model: EmbeddingModel,
    labels: LabelIndex,
    norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved<'a> {
    pub token: &'a str,
    pub index: usize,
    pub pos: Option<&'a str>,
    pub vector: &'a [f32],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub score: f64,
    pub oov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub token: String,
    /// Sidecar label, when the dataset has one for this token.
    pub label: Option<String>,
    pub pos: Option<String>,
    pub score: f64,
}

impl Neighbor {
    /// Display name: the label with its POS in parentheses, else the token.
    pub fn concept(&self) -> String {
        match (&self.label, &self.pos) {
            (Some(l), Some(p)) => format!("{l} ({p})"),
            (Some(l), None) => l.clone(),
            _ => self.token.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analogy {
    /// Input labels that resolved to nothing; results are empty if any.
    pub oov: Vec<String>,
    pub results: Vec<Neighbor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub score: f64,
    /// Per-dataset similarity in name order.
    pub per_dataset: Vec<(String, Similarity)>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, model: EmbeddingModel, labels: LabelIndex) -> Self {
        let norms = (0..model.len()).map(|i| norm64(model.row(i))).collect();
        Dataset { name: name.into(), model, labels, norms }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn labels(&self) -> &LabelIndex {
        &self.labels
    }

    pub fn resolve(&self, label: &str) -> Vec<Resolved<'_>> {
        self.labels
            .resolve(&self.model, label)
            .into_iter()
            .map(|(index, pos)| Resolved { token: self.model.token(index), index, pos, vector: self.model.row(index) })
            .collect()
    }

    /// Max cosine over all resolved vector pairs; 0 with `oov` when either side is unknown.
    pub fn similarity(&self, a: &str, b: &str) -> Similarity {
        let (ra, rb) = (self.resolve(a), self.resolve(b));
        if ra.is_empty() || rb.is_empty() {
            return Similarity { score: 0.0, oov: true };
        }
        let mut best = f64::NEG_INFINITY;
        for x in &ra {
            for y in &rb {
                let s = ratio(dot64(x.vector, y.vector), self.norms[x.index] * self.norms[y.index]);
                best = best.max(s);
            }
        }
        Similarity { score: best, oov: false }
    }

    fn neighbor(&self, index: usize, score: f64) -> Neighbor {
        let (label, pos) = match self.labels.display(index) {
            Some((l, p)) => (Some(l.clone()), p.clone()),
            None => (None, None),
        };
        Neighbor { token: self.model.token(index).to_owned(), label, pos, score }
    }

    /// Keeps the best `n` of `scores` (NaN marks excluded rows), sorted by
    /// descending score, ties by token.
    fn top_n(&self, scores: &[f64], n: usize) -> Vec<Neighbor> {
        let by_rank = |a: &usize, b: &usize| -> Ordering {
            scores[*b].total_cmp(&scores[*a]).then_with(|| self.model.token(*a).cmp(self.model.token(*b)))
        };
        let mut candidates: Vec<usize> = (0..scores.len()).filter(|&i| !scores[i].is_nan()).collect();
        if n < candidates.len() {
            candidates.select_nth_unstable_by(n, by_rank);
            candidates.truncate(n);
        }
        candidates.sort_unstable_by(by_rank);
        candidates.into_iter().map(|i| self.neighbor(i, scores[i])).collect()
    }

    /// Brute-force neighbors of every resolved vector of `label`, merged per
    /// token by maximum score, excluding the label's own tokens.
    pub fn closest_concepts(&self, label: &str, n: usize) -> Vec<Neighbor> {
        let query = self.resolve(label);
        if query.is_empty() || n == 0 {
            return Vec::new();
        }
        let mut scores = vec![f64::NEG_INFINITY; self.model.len()];
        for q in &query {
            let qn = self.norms[q.index];
            for (i, best) in scores.iter_mut().enumerate() {
                let s = ratio(dot64(q.vector, self.model.row(i)), qn * self.norms[i]);
                if s > *best {
                    *best = s;
                }
            }
        }
        for q in &query {
            scores[q.index] = f64::NAN;
        }
        self.top_n(&scores, n)
    }

    /// 3CosAdd: rank tokens by cosine to `b - a + c`, using the first
    /// resolved vector of each label and excluding all of their tokens.
    pub fn analogy(&self, a: &str, b: &str, c: &str, n: usize) -> Analogy {
        let resolved = [self.resolve(a), self.resolve(b), self.resolve(c)];
        let oov: Vec<String> = [a, b, c]
            .iter()
            .zip(&resolved)
            .filter(|(_, r)| r.is_empty())
            .map(|(l, _)| (*l).to_owned())
            .collect();
        if !oov.is_empty() {
            return Analogy { oov, results: Vec::new() };
        }
        let (va, vb, vc) = (resolved[0][0].vector, resolved[1][0].vector, resolved[2][0].vector);
        let target: Vec<f64> =
            (0..self.model.dim()).map(|j| f64::from(vb[j]) - f64::from(va[j]) + f64::from(vc[j])).collect();
        let target_norm = target.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut scores: Vec<f64> = (0..self.model.len())
            .map(|i| {
                let row = self.model.row(i);
                let d: f64 = target.iter().zip(row).map(|(&t, &x)| t * f64::from(x)).sum();
                ratio(d, target_norm * self.norms[i])
            })
            .collect();
        for r in resolved.iter().flatten() {
            scores[r.index] = f64::NAN;
        }
        Analogy { oov, results: self.top_n(&scores, n) }
    }
}

/// Named datasets served together.
#[derive(Debug, Clone, Default)]
pub struct ModelStore {
    datasets: BTreeMap<String, Dataset>,
}

impl ModelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dataset: Dataset) -> Result<(), StoreError> {
        if self.datasets.contains_key(dataset.name()) {
            return Err(StoreError::DuplicateDataset(dataset.name().to_owned()));
        }
        self.datasets.insert(dataset.name().to_owned(), dataset);
        Ok(())
    }

    pub fn with(mut self, dataset: Dataset) -> Result<Self, StoreError> {
        self.insert(dataset)?;
        Ok(self)
    }

    pub fn dataset(&self, name: &str) -> Result<&Dataset, StoreError> {
        self.datasets.get(name).ok_or_else(|| StoreError::DatasetNotFound(name.to_owned()))
    }

    pub fn datasets(&self) -> impl Iterator<Item = &Dataset> {
        self.datasets.values()
    }

    pub fn names(&self) -> Vec<&str> {
        self.datasets.keys().map(String::as_str).collect()
    }

    pub fn resolve(&self, dataset: &str, label: &str) -> Result<Vec<Resolved<'_>>, StoreError> {
        Ok(self.dataset(dataset)?.resolve(label))
    }

    pub fn similarity(&self, dataset: &str, a: &str, b: &str) -> Result<Similarity, StoreError> {
        Ok(self.dataset(dataset)?.similarity(a, b))
    }

    pub fn closest_concepts(&self, dataset: &str, label: &str, n: usize) -> Result<Vec<Neighbor>, StoreError> {
        Ok(self.dataset(dataset)?.closest_concepts(label, n))
    }

    pub fn analogy(&self, dataset: &str, a: &str, b: &str, c: &str, n: usize) -> Result<Analogy, StoreError> {
        Ok(self.dataset(dataset)?.analogy(a, b, c, n))
    }

    /// Unnormalized sum of per-dataset similarities; OOV datasets add 0.
    /// Summed in name order, so argument order never changes the result.
    pub fn combined_similarity(&self, datasets: &[&str], a: &str, b: &str) -> Result<Combined, StoreError> {
        let mut names: Vec<&str> = datasets.to_vec();
        names.sort_unstable();
        names.dedup();
        let mut per_dataset = Vec::with_capacity(names.len());
        let mut score = 0.0;
        for name in names {
            let s = self.similarity(name, a, b)?;
            score += s.score;
            per_dataset.push((name.to_owned(), s));
        }
        Ok(Combined { score, per_dataset })
    }

    /// Combined similarity over every loaded dataset.
    pub fn combined_all(&self, a: &str, b: &str) -> Combined {
        let names = self.names();
        self.combined_similarity(&names, a, b).expect("names come from the store")
    }
}
