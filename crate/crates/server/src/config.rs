use std::collections::HashSet;
use std::path::Path;

use kgvec_core::store::DatasetSpec;
use serde::{Deserialize, Serialize};

use crate::ServerError;

pub const DEFAULT_MAX_TOP_N: usize = 100;

/// Server settings, normally read from a TOML file:
///
/// ```toml
/// bind = "127.0.0.1:8080"
/// max_top_n = 100
/// request_timeout_secs = 30
/// cors_origin = "http://localhost:5173"
///
/// [[dataset]]
/// name = "wordnet"
/// model = "models/wordnet.bin"
/// labels = "models/wordnet.labels.tsv"
/// normalization = "sidecar"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub max_top_n: usize,
    pub request_timeout_secs: u64,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            max_top_n: DEFAULT_MAX_TOP_N,
            request_timeout_secs: 30,
            cors_origin: None,
            datasets: Vec::new(),
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServerError> {
        let config: ServerConfig = toml::from_str(text).map_err(|e| ServerError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file and resolves relative dataset paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            for spec in &mut config.datasets {
                spec.model = base.join(&spec.model);
                spec.labels = spec.labels.as_ref().map(|l| base.join(l));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ServerError> {
        if self.datasets.is_empty() {
            return Err(ServerError::Config("at least one [[dataset]] is required".into()));
        }
        if self.max_top_n == 0 {
            return Err(ServerError::Config("max_top_n must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        for spec in &self.datasets {
            if !seen.insert(spec.name.as_str()) {
                return Err(ServerError::Config(format!("duplicate dataset name '{}'", spec.name)));
            }
        }
        Ok(())
    }
}
