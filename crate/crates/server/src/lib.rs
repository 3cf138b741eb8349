//! HTTP/JSON API over a set of loaded embedding models.
//!
//! | route | response |
//! |-------|----------|
//! | `GET /rest/get-vector/{data_set}/{concept_name}` | [`api::VectorResponse`] |
//! | `GET /rest/get-similarity/{data_set}/{concept_1}/{concept_2}` | [`api::SimilarityResponse`] |
//! | `GET /rest/closest-concepts/{data_set}/{top_n}/{concept_name}` | [`api::ClosestResponse`] |
//! | `GET /rest/get-similarity-combined/{concept_1}/{concept_2}` | [`api::CombinedResponse`] |
//! | `GET /health` | [`api::HealthResponse`] |
//!
//! Errors are `{"error": "..."}` with status 400 (malformed path or `top_n`),
//! 404 (unknown dataset) or 503 (models still loading). Every response
//! carries an `X-API-Version` header.

pub mod api;
pub mod config;

use std::future::Future;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::http::{HeaderName, HeaderValue, Method, StatusCode};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use kgvec_core::error::{ModelError, StoreError};
use kgvec_core::store::{DatasetSpec, ModelStore};
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::timeout::TimeoutLayer;

pub use config::ServerConfig;

pub const API_VERSION: &str = "1";
pub const API_VERSION_HEADER: &str = "x-api-version";

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("server configuration: {0}")]
    Config(String),
    #[error("dataset '{name}': {source}")]
    Dataset {
        name: String,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shared request state. The model set is swapped as a whole, so a request
/// always sees one consistent snapshot.
#[derive(Debug)]
pub struct AppState {
    store: RwLock<Option<Arc<ModelStore>>>,
    pub max_top_n: usize,
}

impl AppState {
    pub fn loading(max_top_n: usize) -> Self {
        AppState { store: RwLock::new(None), max_top_n }
    }

    pub fn ready(store: ModelStore, max_top_n: usize) -> Self {
        AppState { store: RwLock::new(Some(Arc::new(store))), max_top_n }
    }

    pub fn snapshot(&self) -> Option<Arc<ModelStore>> {
        self.store.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Installs a new model set; in-flight requests finish on the old one.
    pub fn replace(&self, store: ModelStore) {
        *self.store.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(store));
    }
}

pub fn load_store(specs: &[DatasetSpec]) -> Result<ModelStore, ServerError> {
    let mut store = ModelStore::new();
    for spec in specs {
        let dataset = spec.load().map_err(|source| ServerError::Dataset { name: spec.name.clone(), source })?;
        log::info!("loaded dataset '{}' ({} tokens, dim {})", spec.name, dataset.model().len(), dataset.model().dim());
        store.insert(dataset)?;
    }
    Ok(store)
}

async fn version_header(mut response: Response) -> Response {
    response
        .headers_mut()
        .insert(HeaderName::from_static(API_VERSION_HEADER), HeaderValue::from_static(API_VERSION));
    response
}

pub fn router(state: Arc<AppState>, config: &ServerConfig) -> Router {
    let origin = match config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(value)) => AllowOrigin::exact(value),
        Some(Err(_)) => {
            log::warn!("ignoring invalid cors_origin; allowing any origin");
            AllowOrigin::any()
        }
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new().allow_methods([Method::GET]).allow_origin(origin);

    Router::new()
        .route("/rest/get-vector/{data_set}/{concept_name}", get(api::get_vector))
        .route("/rest/get-similarity/{data_set}/{concept_1}/{concept_2}", get(api::get_similarity))
        .route("/rest/closest-concepts/{data_set}/{top_n}/{concept_name}", get(api::closest_concepts))
        .route("/rest/get-similarity-combined/{concept_1}/{concept_2}", get(api::get_similarity_combined))
        .route("/health", get(api::health))
        .fallback(api::fallback)
        .with_state(state)
        .layer(axum::middleware::map_response(version_header))
        .layer(TimeoutLayer::with_status_code(
            StatusCode::SERVICE_UNAVAILABLE,
            Duration::from_secs(config.request_timeout_secs.max(1)),
        ))
        .layer(cors)
}

/// Serves on `listener` until `shutdown` resolves, loading the configured
/// datasets in the background. `/health` answers 503 until loading ends.
pub async fn serve_on<F>(listener: TcpListener, config: ServerConfig, shutdown: F) -> Result<(), ServerError>
where
    F: Future<Output = ()> + Send + 'static,
{
    config.validate()?;
    let state = Arc::new(AppState::loading(config.max_top_n));
    let app = router(state.clone(), &config);

    let specs = config.datasets.clone();
    let loader = tokio::task::spawn_blocking(move || load_store(&specs));
    let server = axum::serve(listener, app).with_graceful_shutdown(shutdown);
    let server = tokio::spawn(async move { server.await });

    match loader.await {
        Ok(Ok(store)) => state.replace(store),
        Ok(Err(e)) => {
            server.abort();
            return Err(e);
        }
        Err(e) => {
            server.abort();
            return Err(ServerError::Config(format!("model loader panicked: {e}")));
        }
    }
    log::info!("all datasets loaded");
    match server.await {
        Ok(result) => Ok(result?),
        Err(e) => Err(ServerError::Config(format!("server task failed: {e}"))),
    }
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let listener = TcpListener::bind(&config.bind).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    })
    .await
}
