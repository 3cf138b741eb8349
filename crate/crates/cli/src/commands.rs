use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kgvec_core::eval::{evaluate, GoldFormat, GoldStandard, Report, Scorer};
use kgvec_core::ntriples::Strictness;
use kgvec_core::pipeline::{self, PipelineConfig};
use kgvec_core::store::{ModelStore, Neighbor};
use kgvec_core::train::TrainingConfig;
use kgvec_core::walker::WalkConfig;
use kgvec_server::api::{
    ClosestResponse, CombinedResponse, ScoredConcept, SimilarityResponse, VectorEntry, VectorResponse,
};
use kgvec_server::ServerConfig;

use crate::datasets::{pick, ModelArgs};
use crate::{Command, PipelineArgs, Query, TrainArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, strict, output } => {
            let strictness = if strict { Strictness::Strict } else { Strictness::Lenient };
            let report = pipeline::ingest(&input, strictness, &output)?;
            let s = report.stats;
            log::info!(
                "{} vertices, {} predicates, {} adjacency entries, {} literal statements dropped, {} malformed lines skipped",
                s.vertices,
                s.predicates,
                s.adjacency_entries,
                s.dropped_literals,
                report.skipped_lines
            );
            Ok(())
        }
        Command::Walk { graph, depth, walks, seed, output } => {
            let config = WalkConfig { depth, walks_per_entity: walks, seed };
            let stats = pipeline::walk(&graph, &config, &output)?;
            log::info!(
                "{} entities, {} walks ({} attempts), {} tokens",
                stats.entities,
                stats.walks,
                stats.attempts,
                stats.tokens
            );
            Ok(())
        }
        Command::Train { corpus, params, output } => {
            let config = params.apply(TrainingConfig::default());
            let model = pipeline::train_file(&corpus, &config, &output)?;
            log::info!("{} tokens × {} dimensions written to {}", model.len(), model.dim(), output.display());
            Ok(())
        }
        Command::Serve { config, bind } => {
            let mut config = ServerConfig::load(&config)?;
            if let Some(bind) = bind {
                config.bind = bind;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(kgvec_server::serve(config))?;
            Ok(())
        }
        Command::Eval { gold, format, models, combined, out, csv } => {
            eval(&gold, &format, &models, combined, out.as_deref(), csv.as_deref())
        }
        Command::Query { models, json, query } => {
            let store = models.load()?;
            let stdout = std::io::stdout();
            query_command(&store, &query, json, &mut stdout.lock())
        }
        Command::Pipeline(args) => run_pipeline(args),
    }
}

impl TrainArgs {
    fn apply(&self, mut c: TrainingConfig) -> TrainingConfig {
        c.dim = self.dim.unwrap_or(c.dim);
        c.window = self.window.unwrap_or(c.window);
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.negatives = self.negatives.unwrap_or(c.negatives);
        c.mode = self.mode.unwrap_or(c.mode);
        c.alpha = self.alpha.unwrap_or(c.alpha);
        c.min_alpha = self.min_alpha.unwrap_or(c.min_alpha);
        c.min_count = self.min_count.unwrap_or(c.min_count);
        c.sample = self.sample.unwrap_or(c.sample);
        c.seed = self.seed.unwrap_or(c.seed);
        c.threads = self.threads.unwrap_or(c.threads);
        c
    }
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut config: PipelineConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(base) = path.parent() {
                config.input = base.join(&config.input);
                config.output_dir = base.join(&config.output_dir);
            }
            config
        }
        None => PipelineConfig::default(),
    };
    if let Some(input) = args.input {
        config.input = input;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    config.strict |= args.strict;
    config.walk.depth = args.depth.unwrap_or(config.walk.depth);
    config.walk.walks_per_entity = args.walks.unwrap_or(config.walk.walks_per_entity);
    config.seed = args.train.seed.unwrap_or(config.seed);
    config.train = args.train.apply(config.train);
    if config.input.as_os_str().is_empty() {
        bail!("no input graph (use --input or `input` in the config file)");
    }

    let out = pipeline::run(&config)?;
    let c = out.corpus_stats;
    log::info!("graph: {} ({} vertices)", out.graph.display(), out.ingest.stats.vertices);
    log::info!("corpus: {} ({} walks, {} tokens)", out.corpus.display(), c.walks, c.tokens);
    log::info!("model: {} and {} ({} tokens)", out.model_binary.display(), out.model_text.display(), out.vocab_size);
    Ok(())
}

fn eval(
    gold: &[std::path::PathBuf],
    formats: &[GoldFormat],
    models: &ModelArgs,
    combined: bool,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<()> {
    if formats.len() != 1 && formats.len() != gold.len() {
        bail!("give one --format for all gold standards or one per --gold ({} given for {})", formats.len(), gold.len());
    }
    let store = models.load()?;
    let names = store.names();
    let mut results = Vec::new();
    let mut failures = 0;
    for (i, path) in gold.iter().enumerate() {
        let format = formats[i.min(formats.len() - 1)];
        let standard = GoldStandard::load(path, format).with_context(|| format!("loading {}", path.display()))?;
        let mut scorers: Vec<Scorer> = store.datasets().map(Scorer::Single).collect();
        if combined {
            scorers.push(Scorer::Combined(&store, &names));
        }
        for scorer in scorers {
            match evaluate(scorer, &standard) {
                Ok(r) => results.push(r),
                Err(e) => {
                    log::error!("{} on {}: {e}", scorer.name(), standard.name);
                    failures += 1;
                }
            }
        }
    }
    let report = Report::new(results);
    let text = report.to_text();
    match out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(path) = csv {
        fs::write(path, report.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    if failures > 0 {
        bail!("{failures} evaluation(s) failed");
    }
    Ok(())
}

fn scored(neighbors: &[Neighbor]) -> Vec<ScoredConcept> {
    neighbors.iter().map(|n| ScoredConcept { concept: n.concept(), score: n.score }).collect()
}

fn print_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_ranked(out: &mut dyn Write, ranked: &[ScoredConcept]) -> Result<()> {
    for r in ranked {
        writeln!(out, "{}\t{}", r.concept, r.score)?;
    }
    Ok(())
}

pub fn query_command(store: &ModelStore, query: &Query, json: bool, out: &mut dyn Write) -> Result<()> {
    match query {
        Query::Vector { dataset, concept } => {
            let name = pick(store, dataset.as_deref())?;
            let results: Vec<VectorEntry> = store
                .resolve(name, concept)?
                .into_iter()
                .map(|r| VectorEntry { token: r.token.to_owned(), pos: r.pos.map(str::to_owned), vector: r.vector.to_vec() })
                .collect();
            if json {
                print_json(out, &VectorResponse { dataset: name.to_owned(), label: concept.clone(), results })?;
            } else {
                for r in &results {
                    let values: Vec<String> = r.vector.iter().map(f32::to_string).collect();
                    writeln!(out, "{}\t{}\t{}", r.token, r.pos.as_deref().unwrap_or("-"), values.join(" "))?;
                }
            }
        }
        Query::Similarity { dataset, a, b } => {
            let name = pick(store, dataset.as_deref())?;
            let s = store.similarity(name, a, b)?;
            if json {
                let body = SimilarityResponse {
                    dataset: name.to_owned(),
                    concept_1: a.clone(),
                    concept_2: b.clone(),
                    similarity: s.score,
                    oov: s.oov,
                };
                print_json(out, &body)?;
            } else {
                writeln!(out, "{}{}", s.score, if s.oov { "\t(oov)" } else { "" })?;
            }
        }
        Query::Closest { dataset, n, concept } => {
            let name = pick(store, dataset.as_deref())?;
            let result = scored(&store.closest_concepts(name, concept, *n)?);
            if json {
                print_json(out, &ClosestResponse { dataset: name.to_owned(), concept: concept.clone(), result })?;
            } else {
                print_ranked(out, &result)?;
            }
        }
        Query::Combined { a, b } => {
            let c = store.combined_all(a, b);
            if json {
                let body = CombinedResponse {
                    concept_1: a.clone(),
                    concept_2: b.clone(),
                    combined: c.score,
                    per_dataset: c.per_dataset.iter().map(|(n, s)| (n.clone(), s.score)).collect(),
                };
                print_json(out, &body)?;
            } else {
                writeln!(out, "{}", c.score)?;
                for (n, s) in &c.per_dataset {
                    writeln!(out, "  {n}\t{}{}", s.score, if s.oov { "\t(oov)" } else { "" })?;
                }
            }
        }
        Query::Analogy { dataset, a, b, c, n } => {
            let name = pick(store, dataset.as_deref())?;
            let analogy = store.analogy(name, a, b, c, *n)?;
            if !analogy.oov.is_empty() {
                log::warn!("out of vocabulary: {}", analogy.oov.join(", "));
            }
            let result = scored(&analogy.results);
            if json {
                let body = serde_json::json!({ "dataset": name, "a": a, "b": b, "c": c, "oov": analogy.oov, "result": result });
                print_json(out, &body)?;
            } else {
                print_ranked(out, &result)?;
            }
        }
    }
    Ok(())
}
