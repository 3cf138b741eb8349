use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use kgvec_core::labels::Normalization;
use kgvec_core::store::{DatasetSpec, ModelStore};
use kgvec_server::ServerConfig;

/// Which models to load: `--model name=path` (repeatable) with optional
/// `--labels name=path` / `--normalization name=rule`, or the datasets of a
/// server config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// `name=path`, or a bare path named after its file stem.
    #[arg(long = "model", global = true)]
    pub models: Vec<String>,
    /// `name=path` of a label sidecar TSV.
    #[arg(long = "labels", global = true)]
    pub labels: Vec<String>,
    /// `name=rule` with rule exact, iri-suffix or sidecar.
    #[arg(long = "normalization", global = true)]
    pub normalization: Vec<String>,
    /// Server config whose `[[dataset]]` entries are loaded too.
    #[arg(long = "datasets", global = true)]
    pub datasets: Option<PathBuf>,
}

fn split_named(value: &str) -> Result<(String, String)> {
    value
        .split_once('=')
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .ok_or_else(|| anyhow!("expected name=value, got '{value}'"))
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("model");
    name.split('.').next().filter(|s| !s.is_empty()).unwrap_or(name).to_owned()
}

impl ModelArgs {
    pub fn specs(&self) -> Result<Vec<DatasetSpec>> {
        let mut specs = Vec::new();
        if let Some(path) = &self.datasets {
            specs.extend(ServerConfig::load(path)?.datasets);
        }
        for m in &self.models {
            let (name, path) = match m.split_once('=') {
                Some((n, p)) => (n.to_owned(), PathBuf::from(p)),
                None => (stem(Path::new(m)), PathBuf::from(m)),
            };
            specs.push(DatasetSpec { name, model: path, labels: None, normalization: None });
        }
        let mut labels: HashMap<String, PathBuf> = HashMap::new();
        for l in &self.labels {
            let (name, path) = split_named(l)?;
            labels.insert(name, path.into());
        }
        let mut rules: HashMap<String, Normalization> = HashMap::new();
        for r in &self.normalization {
            let (name, rule) = split_named(r)?;
            rules.insert(name, rule.parse().map_err(|e: String| anyhow!(e))?);
        }
        for spec in &mut specs {
            if let Some(path) = labels.remove(&spec.name) {
                spec.labels = Some(path);
            }
            if let Some(rule) = rules.remove(&spec.name) {
                spec.normalization = Some(rule);
            }
        }
        if let Some(name) = labels.keys().chain(rules.keys()).next() {
            bail!("--labels/--normalization name '{name}' matches no --model");
        }
        if specs.is_empty() {
            bail!("no models given (use --model name=path or --datasets <server.toml>)");
        }
        Ok(specs)
    }

    pub fn load(&self) -> Result<ModelStore> {
        let mut store = ModelStore::new();
        for spec in self.specs()? {
            let dataset = spec.load().with_context(|| format!("loading dataset '{}' from {}", spec.name, spec.model.display()))?;
            store.insert(dataset)?;
        }
        Ok(store)
    }
}

/// The named dataset, or the only one loaded.
pub fn pick<'a>(store: &'a ModelStore, name: Option<&'a str>) -> Result<&'a str> {
    match name {
        Some(n) => {
            store.dataset(n)?;
            Ok(n)
        }
        None => match store.names()[..] {
            [only] => Ok(only),
            _ => bail!("several datasets loaded; choose one with --dataset ({})", store.names().join(", ")),
        },
    }
}
