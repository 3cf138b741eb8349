use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::PathRejection;
use axum::extract::{Path, State};
use axum::http::{StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Json;
use kgvec_core::store::ModelStore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::AppState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorEntry {
    pub token: String,
    pub pos: Option<String>,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorResponse {
    pub dataset: String,
    pub label: String,
    pub results: Vec<VectorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub dataset: String,
    pub concept_1: String,
    pub concept_2: String,
    pub similarity: f64,
    pub oov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredConcept {
    pub concept: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosestResponse {
    pub dataset: String,
    pub concept: String,
    pub result: Vec<ScoredConcept>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedResponse {
    pub concept_1: String,
    pub concept_2: String,
    pub combined: f64,
    pub per_dataset: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHealth {
    pub name: String,
    pub vocab_size: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub datasets: Vec<DatasetHealth>,
}

/// Error bodies are always `{"error": message}`.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn unknown_dataset() -> Self {
        ApiError(StatusCode::NOT_FOUND, "unknown dataset".into())
    }

    fn loading() -> Self {
        ApiError(StatusCode::SERVICE_UNAVAILABLE, "models are still loading".into())
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, message.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<PathRejection> for ApiError {
    fn from(rejection: PathRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

fn store(state: &AppState) -> Result<Arc<ModelStore>, ApiError> {
    state.snapshot().ok_or_else(ApiError::loading)
}

pub async fn get_vector(
    State(state): State<Arc<AppState>>,
    path: Result<Path<(String, String)>, PathRejection>,
) -> Result<Json<VectorResponse>, ApiError> {
    let Path((dataset, label)) = path?;
    let store = store(&state)?;
    let resolved = store.resolve(&dataset, &label).map_err(|_| ApiError::unknown_dataset())?;
    let results = resolved
        .into_iter()
        .map(|r| VectorEntry { token: r.token.to_owned(), pos: r.pos.map(str::to_owned), vector: r.vector.to_vec() })
        .collect();
    Ok(Json(VectorResponse { dataset, label, results }))
}

pub async fn get_similarity(
    State(state): State<Arc<AppState>>,
    path: Result<Path<(String, String, String)>, PathRejection>,
) -> Result<Json<SimilarityResponse>, ApiError> {
    let Path((dataset, concept_1, concept_2)) = path?;
    let store = store(&state)?;
    let sim = store.similarity(&dataset, &concept_1, &concept_2).map_err(|_| ApiError::unknown_dataset())?;
    Ok(Json(SimilarityResponse { dataset, concept_1, concept_2, similarity: sim.score, oov: sim.oov }))
}

pub async fn closest_concepts(
    State(state): State<Arc<AppState>>,
    path: Result<Path<(String, String, String)>, PathRejection>,
) -> Result<Json<ClosestResponse>, ApiError> {
    let Path((dataset, top_n, concept)) = path?;
    let store = store(&state)?;
    let n: usize = top_n
        .parse()
        .ok()
        .filter(|n| (1..=state.max_top_n).contains(n))
        .ok_or_else(|| ApiError::bad_request(format!("top_n must be an integer between 1 and {}", state.max_top_n)))?;
    store.dataset(&dataset).map_err(|_| ApiError::unknown_dataset())?;

    let (name, label) = (dataset.clone(), concept.clone());
    let neighbors = tokio::task::spawn_blocking(move || store.closest_concepts(&name, &label, n))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|_| ApiError::unknown_dataset())?;
    let result = neighbors.iter().map(|nb| ScoredConcept { concept: nb.concept(), score: nb.score }).collect();
    Ok(Json(ClosestResponse { dataset, concept, result }))
}

pub async fn get_similarity_combined(
    State(state): State<Arc<AppState>>,
    path: Result<Path<(String, String)>, PathRejection>,
) -> Result<Json<CombinedResponse>, ApiError> {
    let Path((concept_1, concept_2)) = path?;
    let store = store(&state)?;
    let combined = store.combined_all(&concept_1, &concept_2);
    let per_dataset = combined.per_dataset.into_iter().map(|(name, s)| (name, s.score)).collect();
    Ok(Json(CombinedResponse { concept_1, concept_2, combined: combined.score, per_dataset }))
}

pub async fn health(State(state): State<Arc<AppState>>) -> (StatusCode, Json<HealthResponse>) {
    match state.snapshot() {
        Some(store) => {
            let datasets = store
                .datasets()
                .map(|d| DatasetHealth { name: d.name().to_owned(), vocab_size: d.model().len(), dim: d.model().dim() })
                .collect();
            (StatusCode::OK, Json(HealthResponse { status: "ok".into(), datasets }))
        }
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(HealthResponse { status: "loading".into(), datasets: Vec::new() })),
    }
}

pub async fn fallback(uri: Uri) -> ApiError {
    if uri.path().starts_with("/rest/") {
        ApiError::bad_request(format!("malformed request path '{}'", uri.path()))
    } else {
        ApiError(StatusCode::NOT_FOUND, "not found".into())
    }
}
