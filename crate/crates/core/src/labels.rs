//! Natural-language label → model token resolution.

use std::collections::HashMap;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::EmbeddingModel;

/// How a dataset maps query labels onto tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// The label must equal a token.
    #[default]
    Exact,
    /// Case-folded label, spaces mapped to underscores, matched against the
    /// last path or fragment segment of each token. `Nine Inch Nails` finds
    /// `http://dbpedia.org/resource/Nine_Inch_Nails`. A label equal to a
    /// whole token also matches.
    IriSuffix,
    /// Explicit `label<TAB>token[<TAB>pos]` sidecar file.
    Sidecar,
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Normalization::Exact),
            "iri-suffix" => Ok(Normalization::IriSuffix),
            "sidecar" => Ok(Normalization::Sidecar),
            other => Err(format!("unknown normalization '{other}' (expected exact, iri-suffix or sidecar)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LabelEntry {
    token: usize,
    pos: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    rule: Normalization,
    entries: HashMap<String, Vec<LabelEntry>>,
    /// Sidecar label (and POS) for a token, used when displaying neighbors.
    display: HashMap<usize, (String, Option<String>)>,
    skipped: usize,
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase().replace(' ', "_")
}

fn local_name(token: &str) -> &str {
    token.rsplit(['/', '#']).next().unwrap_or(token)
}

impl LabelIndex {
    pub fn exact() -> Self {
        LabelIndex { rule: Normalization::Exact, ..Default::default() }
    }

    pub fn iri_suffix(model: &EmbeddingModel) -> Self {
        let mut entries: HashMap<String, Vec<LabelEntry>> = HashMap::new();
        for (i, token) in model.tokens().iter().enumerate() {
            entries.entry(fold(local_name(token))).or_default().push(LabelEntry { token: i, pos: None });
        }
        LabelIndex { rule: Normalization::IriSuffix, entries, ..Default::default() }
    }

    /// Reads a sidecar TSV. Rows naming tokens the model lacks are skipped
    /// and counted, since sidecars are often built for a larger vocabulary.
    pub fn sidecar<R: BufRead>(model: &EmbeddingModel, reader: R) -> Result<Self, ModelError> {
        let mut index = LabelIndex { rule: Normalization::Sidecar, ..Default::default() };
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let (label, token, pos) = match cols[..] {
                [label, token] => (label, token, None),
                [label, token, pos] => (label, token, Some(pos).filter(|p| !p.is_empty())),
                _ => {
                    return Err(ModelError::Labels {
                        line: i + 1,
                        message: format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
                    })
                }
            };
            let Some(t) = model.index_of(token) else {
                index.skipped += 1;
                continue;
            };
            let pos = pos.map(str::to_owned);
            let list = index.entries.entry(label.to_owned()).or_default();
            if !list.iter().any(|e| e.token == t) {
                list.push(LabelEntry { token: t, pos: pos.clone() });
            }
            index.display.entry(t).or_insert_with(|| (label.to_owned(), pos));
        }
        Ok(index)
    }

    pub fn rule(&self) -> Normalization {
        self.rule
    }

    /// Sidecar rows dropped because their token is not in the model.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// All `(token index, POS)` matches for the label; empty when out of vocabulary.
    pub fn resolve(&self, model: &EmbeddingModel, label: &str) -> Vec<(usize, Option<&str>)> {
        let listed = |key: &str| -> Vec<(usize, Option<&str>)> {
            self.entries.get(key).into_iter().flatten().map(|e| (e.token, e.pos.as_deref())).collect()
        };
        match self.rule {
            Normalization::Exact => model.index_of(label).map(|t| (t, None)).into_iter().collect(),
            Normalization::IriSuffix => {
                let mut out: Vec<(usize, Option<&str>)> = model.index_of(label).map(|t| (t, None)).into_iter().collect();
                for hit in listed(&fold(label)) {
                    if !out.iter().any(|o| o.0 == hit.0) {
                        out.push(hit);
                    }
                }
                out
            }
            Normalization::Sidecar => listed(label),
        }
    }

    pub fn display(&self, token: usize) -> Option<&(String, Option<String>)> {
        self.display.get(&token)
    }
}
