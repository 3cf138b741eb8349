//! Word-similarity evaluation with Spearman's rank correlation.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::EvalError;
use crate::store::{Dataset, ModelStore};

/// On-disk layouts of the supported gold standards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldFormat {
    /// CSV with a `Word 1,Word 2,Human (mean)` header (spacing optional).
    Ws353,
    /// Tab-separated with a header naming `word1`, `word2` and `SimLex999`.
    Simlex,
    /// Space-separated `word word score` rows, natural form, scores 0..50.
    Men,
    /// MEN lemma form: `sun-n sunlight-n 50.0`; POS suffixes are stripped.
    MenLemma,
}

impl FromStr for GoldFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ws353" => Ok(GoldFormat::Ws353),
            "simlex" => Ok(GoldFormat::Simlex),
            "men" => Ok(GoldFormat::Men),
            "men-lemma" => Ok(GoldFormat::MenLemma),
            other => Err(EvalError::UnknownFormat(other.to_owned())),
        }
    }
}

impl GoldFormat {
    /// Nominal score range of the published files.
    pub fn scale(self) -> (f64, f64) {
        match self {
            GoldFormat::Ws353 | GoldFormat::Simlex => (0.0, 10.0),
            GoldFormat::Men | GoldFormat::MenLemma => (0.0, 50.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldStandard {
    pub name: String,
    pub format: GoldFormat,
    pub pairs: Vec<GoldPair>,
}

impl GoldStandard {
    pub fn load(path: &Path, format: GoldFormat) -> Result<Self, EvalError> {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::read(name, BufReader::new(File::open(path)?), format)
    }

    pub fn read<R: BufRead>(name: impl Into<String>, reader: R, format: GoldFormat) -> Result<Self, EvalError> {
        let pairs = match format {
            GoldFormat::Ws353 => read_ws353(reader)?,
            GoldFormat::Simlex => read_simlex(reader)?,
            GoldFormat::Men | GoldFormat::MenLemma => read_men(reader, format == GoldFormat::MenLemma)?,
        };
        if pairs.len() < 2 {
            return Err(EvalError::TooFewPairs(pairs.len()));
        }
        Ok(GoldStandard { name: name.into(), format, pairs })
    }
}

fn parse_score(raw: &str, row: usize) -> Result<f64, EvalError> {
    match raw.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(EvalError::Row { row, message: format!("non-numeric score '{}'", raw.trim()) }),
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase()
}

fn read_ws353<R: Read>(reader: R) -> Result<Vec<GoldPair>, EvalError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(squash).collect();
    if header.len() < 3 || header[0] != "word1" || header[1] != "word2" || header[2] != "human(mean)" {
        return Err(EvalError::Header(format!("expected Word1,Word2,Human(mean), found {}", header.join(","))));
    }
    let mut pairs = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() < 3 {
            return Err(EvalError::Row { row, message: format!("expected 3 columns, found {}", record.len()) });
        }
        pairs.push(GoldPair { word1: record[0].to_owned(), word2: record[1].to_owned(), score: parse_score(&record[2], row)? });
    }
    Ok(pairs)
}

fn read_simlex<R: BufRead>(reader: R) -> Result<Vec<GoldPair>, EvalError> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| EvalError::Header("empty file".into()))??;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| EvalError::Header(format!("missing column '{name}'")))
    };
    let (w1, w2, score) = (find("word1")?, find("word2")?, find("SimLex999")?);
    let needed = w1.max(w2).max(score) + 1;
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < needed {
            return Err(EvalError::Row { row, message: format!("expected at least {needed} columns, found {}", fields.len()) });
        }
        pairs.push(GoldPair { word1: fields[w1].to_owned(), word2: fields[w2].to_owned(), score: parse_score(fields[score], row)? });
    }
    Ok(pairs)
}

fn strip_pos(word: &str) -> &str {
    match word.rsplit_once('-') {
        Some((stem, tag)) if tag.len() == 1 && !stem.is_empty() => stem,
        _ => word,
    }
}

fn read_men<R: BufRead>(reader: R, lemma: bool) -> Result<Vec<GoldPair>, EvalError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let row = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [a, b, s] = fields[..] else {
            return Err(EvalError::Row { row, message: format!("expected 3 fields, found {}", fields.len()) });
        };
        let (a, b) = if lemma { (strip_pos(a), strip_pos(b)) } else { (a, b) };
        pairs.push(GoldPair { word1: a.to_owned(), word2: b.to_owned(), score: parse_score(s, row)? });
    }
    Ok(pairs)
}

/// Fractional ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::UndefinedCorrelation);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// What produces the system score for a pair.
#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a> {
    Single(&'a Dataset),
    /// Sum of similarities over the named datasets of a store.
    Combined(&'a ModelStore, &'a [&'a str]),
}

impl Scorer<'_> {
    pub fn name(&self) -> String {
        match self {
            Scorer::Single(d) => d.name().to_owned(),
            Scorer::Combined(..) => COMBINED.to_owned(),
        }
    }

    fn known(&self, word: &str) -> Result<bool, EvalError> {
        Ok(match self {
            Scorer::Single(d) => !d.resolve(word).is_empty(),
            Scorer::Combined(store, names) => {
                let mut any = false;
                for n in *names {
                    any |= !store.dataset(n)?.resolve(word).is_empty();
                }
                any
            }
        })
    }

    pub fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        Ok(match self {
            Scorer::Single(d) => d.similarity(a, b).score,
            Scorer::Combined(store, names) => store.combined_similarity(names, a, b)?.score,
        })
    }
}

pub const COMBINED: &str = "combined";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub gold: String,
    pub dataset: String,
    pub rho: f64,
    pub pairs: usize,
    pub oov_first: usize,
    pub oov_second: usize,
    pub oov_both: usize,
    /// System score per gold pair, in gold order.
    pub scores: Vec<f64>,
}

impl EvalResult {
    /// Pairs with at least one out-of-vocabulary word.
    pub fn oov_pairs(&self) -> usize {
        self.oov_first + self.oov_second - self.oov_both
    }
}

/// Scores every gold pair (OOV pairs stay in with score 0) and correlates.
pub fn evaluate(scorer: Scorer<'_>, gold: &GoldStandard) -> Result<EvalResult, EvalError> {
    let mut scores = Vec::with_capacity(gold.pairs.len());
    let (mut oov_first, mut oov_second, mut oov_both) = (0, 0, 0);
    for pair in &gold.pairs {
        let first = !scorer.known(&pair.word1)?;
        let second = !scorer.known(&pair.word2)?;
        oov_first += usize::from(first);
        oov_second += usize::from(second);
        oov_both += usize::from(first && second);
        scores.push(scorer.score(&pair.word1, &pair.word2)?);
    }
    let human: Vec<f64> = gold.pairs.iter().map(|p| p.score).collect();
    let rho = spearman(&human, &scores)?;
    Ok(EvalResult {
        gold: gold.name.clone(),
        dataset: scorer.name(),
        rho,
        pairs: gold.pairs.len(),
        oov_first,
        oov_second,
        oov_both,
        scores,
    })
}

/// Dataset × gold standard matrix of correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub datasets: Vec<String>,
    pub golds: Vec<String>,
    results: Vec<EvalResult>,
}

impl Report {
    /// Rows keep first-appearance order with `combined` moved last.
    pub fn new(results: Vec<EvalResult>) -> Self {
        let mut datasets: Vec<String> = Vec::new();
        let mut golds: Vec<String> = Vec::new();
        for r in &results {
            if !datasets.contains(&r.dataset) {
                datasets.push(r.dataset.clone());
            }
            if !golds.contains(&r.gold) {
                golds.push(r.gold.clone());
            }
        }
        if let Some(i) = datasets.iter().position(|d| d == COMBINED) {
            let c = datasets.remove(i);
            datasets.push(c);
        }
        Report { datasets, golds, results }
    }

    pub fn get(&self, dataset: &str, gold: &str) -> Option<&EvalResult> {
        self.results.iter().find(|r| r.dataset == dataset && r.gold == gold)
    }

    fn table(&self, header: &str, cell: impl Fn(&EvalResult) -> String) -> Vec<Vec<String>> {
        let mut rows = vec![std::iter::once(header.to_owned()).chain(self.golds.iter().cloned()).collect::<Vec<_>>()];
        for d in &self.datasets {
            let mut row = vec![d.clone()];
            row.extend(self.golds.iter().map(|g| self.get(d, g).map(&cell).unwrap_or_else(|| "-".into())));
            rows.push(row);
        }
        rows
    }

    /// Aligned plain-text rendering: the rho matrix, then OOV counts as
    /// `word1/word2/both of pairs`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        render_table(&mut out, &self.table("dataset", |r| format!("{:.4}", r.rho)));
        out.push('\n');
        out.push_str("OOV pairs (word1/word2/both of total)\n");
        render_table(
            &mut out,
            &self.table("dataset", |r| format!("{}/{}/{} of {}", r.oov_first, r.oov_second, r.oov_both, r.pairs)),
        );
        out
    }

    /// CSV with one rho column per gold standard followed by one
    /// `<gold>_oov` column each (pairs with any OOV word).
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_owned()];
        header.extend(self.golds.iter().cloned());
        header.extend(self.golds.iter().map(|g| format!("{g}_oov")));
        w.write_record(&header)?;
        for d in &self.datasets {
            let mut row = vec![d.clone()];
            row.extend(self.golds.iter().map(|g| self.get(d, g).map(|r| format!("{:.4}", r.rho)).unwrap_or_default()));
            row.extend(self.golds.iter().map(|g| self.get(d, g).map(|r| r.oov_pairs().to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

fn render_table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    for (i, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
}
