//! Skip-gram training over a walk corpus.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::TrainError;
use crate::model::EmbeddingModel;
use crate::sgns::{sgd_step, AtomicRows, EmbeddingMatrices, NegativeSampler, Real, RowStore, Scratch, SliceRows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    SkipGram,
    Cbow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub mode: Mode,
    pub alpha: f64,
    pub min_alpha: f64,
    pub min_count: u64,
    /// Frequent-token subsampling threshold; 0 disables it.
    pub sample: f64,
    pub ns_power: f64,
    pub seed: u64,
    /// 1 is deterministic. More workers update shared rows without locks.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 200,
            window: 5,
            epochs: 5,
            negatives: 25,
            mode: Mode::SkipGram,
            alpha: 0.025,
            min_alpha: 1e-4,
            min_count: 1,
            sample: 0.0,
            ns_power: 0.75,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_owned()));
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if !(self.alpha > self.min_alpha && self.min_alpha >= 0.0) {
            return fail("require alpha > min_alpha >= 0");
        }
        if self.sample < 0.0 || !self.ns_power.is_finite() {
            return fail("sample must be >= 0 and ns_power finite");
        }
        if self.threads == 0 {
            return fail("threads must be at least 1");
        }
        Ok(())
    }
}

/// Tokens by descending frequency, ties by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total: u64,
}

impl Vocabulary {
    pub fn build<R: BufRead>(corpus: R, min_count: u64) -> Result<Vocabulary, TrainError> {
        Ok(Corpus::from_reader(corpus, min_count)?.vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Occurrences of retained tokens.
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Corpus encoded against its vocabulary; tokens under `min_count` are removed.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocabulary,
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    sha256: String,
}

impl Corpus {
    pub fn from_reader<R: BufRead>(mut reader: R, min_count: u64) -> Result<Corpus, TrainError> {
        let mut first_seen: HashMap<String, u32> = HashMap::new();
        let mut raw_counts: Vec<u64> = Vec::new();
        let mut raw_tokens: Vec<String> = Vec::new();
        let mut tokens = Vec::new();
        let mut offsets = vec![0];
        let mut hasher = Sha256::new();
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            hasher.update(line.as_bytes());
            let before = tokens.len();
            for tok in line.split_whitespace() {
                let id = match first_seen.get(tok) {
                    Some(&id) => id,
                    None => {
                        let id = raw_tokens.len() as u32;
                        first_seen.insert(tok.to_owned(), id);
                        raw_tokens.push(tok.to_owned());
                        raw_counts.push(0);
                        id
                    }
                };
                raw_counts[id as usize] += 1;
                tokens.push(id);
            }
            if tokens.len() > before {
                offsets.push(tokens.len());
            }
        }

        let mut order: Vec<u32> = (0..raw_tokens.len() as u32).filter(|&i| raw_counts[i as usize] >= min_count).collect();
        // Stable sort keeps first-occurrence order among equal counts.
        order.sort_by(|&a, &b| raw_counts[b as usize].cmp(&raw_counts[a as usize]));
        if order.is_empty() {
            return Err(TrainError::EmptyVocabulary);
        }
        let mut remap = vec![u32::MAX; raw_tokens.len()];
        let mut vocab = Vocabulary::default();
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
            let token = std::mem::take(&mut raw_tokens[old as usize]);
            vocab.index.insert(token.clone(), new as u32);
            vocab.tokens.push(token);
            vocab.counts.push(raw_counts[old as usize]);
            vocab.total += raw_counts[old as usize];
        }

        let mut kept = Vec::with_capacity(tokens.len());
        let mut kept_offsets = vec![0];
        for w in offsets.windows(2) {
            kept.extend(tokens[w[0]..w[1]].iter().map(|&t| remap[t as usize]).filter(|&t| t != u32::MAX));
            if kept.len() > *kept_offsets.last().unwrap() {
                kept_offsets.push(kept.len());
            }
        }
        let digest = hasher.finalize();
        let mut sha256 = String::with_capacity(64);
        for byte in digest.iter() {
            let _ = write!(sha256, "{byte:02x}");
        }
        Ok(Corpus { vocab, tokens: kept, offsets: kept_offsets, sha256 })
    }

    pub fn sentence_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn sentence(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Hex SHA-256 of the raw corpus bytes.
    pub fn sha256(&self) -> &str {
        &self.sha256
    }
}

/// Echo of the configuration and corpus a model was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainingConfig,
    pub vocab_size: usize,
    pub corpus_tokens: usize,
    pub corpus_sha256: String,
    /// Mean SGNS loss per training example, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Shared state for the training loop, independent of the row storage.
struct Schedule<'a> {
    corpus: &'a Corpus,
    config: &'a TrainingConfig,
    sampler: NegativeSampler,
    keep_prob: Vec<f64>,
    total_positions: usize,
    processed: AtomicUsize,
    abort: AtomicBool,
}

#[derive(Default, Clone)]
struct EpochLoss {
    sum: f64,
    pairs: u64,
}

impl Schedule<'_> {
    fn alpha(&self) -> f64 {
        let done = self.processed.load(Ordering::Relaxed) as f64 / self.total_positions.max(1) as f64;
        let a = self.config.alpha - (self.config.alpha - self.config.min_alpha) * done;
        a.max(self.config.min_alpha)
    }

    fn negatives<R: Rng>(&self, rng: &mut R, positive: usize, out: &mut Vec<usize>) {
        out.clear();
        for _ in 0..self.config.negatives {
            let mut n = self.sampler.sample(rng);
            if n == positive {
                n = self.sampler.sample(rng);
            }
            out.push(n);
        }
    }

    /// Trains over `sentences` for one epoch against the given row stores.
    fn run_epoch<F, I, O, R>(
        &self,
        epoch: usize,
        sentences: std::ops::Range<usize>,
        input: &mut I,
        output: &mut O,
        rng: &mut R,
    ) -> Result<EpochLoss, TrainError>
    where
        F: Real,
        I: RowStore<F>,
        O: RowStore<F>,
        R: Rng,
    {
        let dim = self.config.dim;
        let window = self.config.window;
        let mut scratch = Scratch::<F>::new(dim);
        let mut context_row = vec![F::default(); dim];
        let mut negatives = Vec::with_capacity(self.config.negatives);
        let mut filtered = Vec::new();
        let mut contexts = Vec::new();
        let mut loss = EpochLoss::default();

        for s in sentences {
            if self.abort.load(Ordering::Relaxed) {
                break;
            }
            let raw = self.corpus.sentence(s);
            filtered.clear();
            if self.config.sample > 0.0 {
                filtered.extend(raw.iter().filter(|&&t| rng.random::<f64>() < self.keep_prob[t as usize]));
            } else {
                filtered.extend_from_slice(raw);
            }
            let alpha = self.alpha();
            for pos in 0..filtered.len() {
                let radius = rng.random_range(1..=window);
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(filtered.len() - 1);
                let center = filtered[pos] as usize;
                match self.config.mode {
                    Mode::SkipGram => {
                        for ctx_pos in (lo..=hi).filter(|&j| j != pos) {
                            let context = filtered[ctx_pos] as usize;
                            self.negatives(rng, context, &mut negatives);
                            input.load(center, scratch.hidden_mut());
                            let l = sgd_step(output, context, &negatives, alpha, &mut scratch);
                            if !l.is_finite() {
                                return Err(self.non_finite(l, epoch, s, center, context, alpha));
                            }
                            input.add(center, scratch.hidden_delta());
                            loss.sum += l;
                            loss.pairs += 1;
                        }
                    }
                    Mode::Cbow => {
                        contexts.clear();
                        contexts.extend((lo..=hi).filter(|&j| j != pos).map(|j| filtered[j] as usize));
                        if contexts.is_empty() {
                            continue;
                        }
                        let hidden = scratch.hidden_mut();
                        hidden.iter_mut().for_each(|x| *x = F::default());
                        for &c in &contexts {
                            input.load(c, &mut context_row);
                            for (h, &x) in hidden.iter_mut().zip(&context_row) {
                                *h = *h + x;
                            }
                        }
                        let inv = F::from_f64(1.0 / contexts.len() as f64);
                        hidden.iter_mut().for_each(|h| *h = *h * inv);
                        self.negatives(rng, center, &mut negatives);
                        let l = sgd_step(output, center, &negatives, alpha, &mut scratch);
                        if !l.is_finite() {
                            return Err(self.non_finite(l, epoch, s, contexts[0], center, alpha));
                        }
                        for &c in &contexts {
                            input.add(c, scratch.hidden_delta());
                        }
                        loss.sum += l;
                        loss.pairs += 1;
                    }
                }
            }
            self.processed.fetch_add(raw.len(), Ordering::Relaxed);
        }
        Ok(loss)
    }

    fn non_finite(&self, loss: f64, epoch: usize, sentence: usize, center: usize, context: usize, alpha: f64) -> TrainError {
        self.abort.store(true, Ordering::Relaxed);
        TrainError::NonFinite {
            loss,
            epoch,
            sentence,
            center: self.corpus.vocab.token(center).to_owned(),
            context: self.corpus.vocab.token(context).to_owned(),
            alpha,
        }
    }
}

fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed ^ (worker as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Trains a model over an encoded corpus.
pub fn train(corpus: &Corpus, config: &TrainingConfig) -> Result<EmbeddingModel, TrainError> {
    config.validate()?;
    let vocab = &corpus.vocab;
    if vocab.is_empty() {
        return Err(TrainError::EmptyVocabulary);
    }
    let dim = config.dim;
    let threshold = config.sample * vocab.total() as f64;
    let keep_prob = vocab
        .counts()
        .iter()
        .map(|&c| {
            if config.sample > 0.0 {
                let f = c as f64;
                ((f / threshold).sqrt() + 1.0) * threshold / f
            } else {
                1.0
            }
        })
        .collect();
    let schedule = Schedule {
        corpus,
        config,
        sampler: NegativeSampler::new(vocab.counts(), config.ns_power),
        keep_prob,
        total_positions: corpus.token_count() * config.epochs,
        processed: AtomicUsize::new(0),
        abort: AtomicBool::new(false),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut matrices = EmbeddingMatrices::<f32>::initialize(vocab.len(), dim, &mut rng);
    let sentences = corpus.sentence_count();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    if config.threads == 1 {
        for epoch in 0..config.epochs {
            let mut input = SliceRows { data: &mut matrices.input, dim };
            let mut output = SliceRows { data: &mut matrices.output, dim };
            let l = schedule.run_epoch(epoch, 0..sentences, &mut input, &mut output, &mut rng)?;
            epoch_losses.push(l.sum / l.pairs.max(1) as f64);
        }
    } else {
        let to_atomic = |v: &[f32]| v.iter().map(|x| AtomicU32::new(x.to_bits())).collect::<Vec<_>>();
        let input = to_atomic(&matrices.input);
        let output = to_atomic(&matrices.output);
        let totals = Mutex::new(vec![EpochLoss::default(); config.epochs]);
        let first_error = Mutex::new(None);
        let workers = config.threads.min(sentences.max(1));
        std::thread::scope(|scope| {
            for w in 0..workers {
                let range = (sentences * w / workers)..(sentences * (w + 1) / workers);
                let (schedule, input, output, totals, first_error) = (&schedule, &input, &output, &totals, &first_error);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(config.seed, w));
                    let mut in_rows = AtomicRows { data: input, dim };
                    let mut out_rows = AtomicRows { data: output, dim };
                    for epoch in 0..config.epochs {
                        match schedule.run_epoch(epoch, range.clone(), &mut in_rows, &mut out_rows, &mut rng) {
                            Ok(l) => {
                                let mut t = totals.lock().unwrap();
                                t[epoch].sum += l.sum;
                                t[epoch].pairs += l.pairs;
                            }
                            Err(e) => {
                                first_error.lock().unwrap().get_or_insert(e);
                                return;
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = first_error.into_inner().unwrap() {
            return Err(e);
        }
        epoch_losses = totals.into_inner().unwrap().iter().map(|l| l.sum / l.pairs.max(1) as f64).collect();
        matrices.input = input.iter().map(|x| f32::from_bits(x.load(Ordering::Relaxed))).collect();
    }

    let metadata = TrainingMetadata {
        config: config.clone(),
        vocab_size: vocab.len(),
        corpus_tokens: corpus.token_count(),
        corpus_sha256: corpus.sha256().to_owned(),
        epoch_losses,
    };
    Ok(EmbeddingModel::new(vocab.tokens().to_vec(), dim, matrices.input, Some(metadata))
        .expect("vocabulary tokens are unique"))
}
