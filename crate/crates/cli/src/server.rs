//! Local JSON API over a dataset directory. No authentication; meant to be
//! bound to localhost.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use pagesift::dataset::{self, parse_labels, write_labels, DatasetError};
use pagesift::{Extractor, Viewport};
use serde_json::json;

use crate::commands::predictions_json;

pub struct AppState {
    pub dataset: PathBuf,
    pub extractor: Option<Extractor>,
    pub viewport: Viewport,
    /// Serializes label writes; last writer wins.
    write_lock: Mutex<()>,
}

impl AppState {
    pub fn new(dataset: PathBuf, extractor: Option<Extractor>, viewport: Viewport) -> Arc<Self> {
        Arc::new(Self { dataset, extractor, viewport, write_lock: Mutex::new(()) })
    }

    fn page_file(&self, id: &str, name: &str) -> Result<PathBuf, ApiError> {
        if !dataset::valid_page_id(id) {
            return Err(ApiError(StatusCode::BAD_REQUEST, format!("invalid page id {id:?}")));
        }
        let path = self.dataset.join(id).join(name);
        if !self.dataset.join(id).join(dataset::PAGE_FILE).is_file() {
            return Err(ApiError(StatusCode::NOT_FOUND, format!("no page {id:?}")));
        }
        Ok(path)
    }
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let status = match e {
            DatasetError::MissingFile(_) => StatusCode::NOT_FOUND,
            DatasetError::InvalidPageId(_) | DatasetError::MalformedLabels { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

fn json_response(body: impl Into<axum::body::Body>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body.into()).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(internal)?
}

async fn list_pages(State(state): State<Arc<AppState>>) -> Result<Json<Vec<String>>, ApiError> {
    blocking(move || Ok(dataset::list_pages(&state.dataset)?)).await.map(Json)
}

async fn get_page(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let path = state.page_file(&id, dataset::PAGE_FILE)?;
    let html = blocking(move || std::fs::read(&path).map_err(internal)).await?;
    Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response())
}

async fn get_labels(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let path = state.page_file(&id, dataset::LABELS_FILE)?;
    blocking(move || match std::fs::read(&path) {
        Ok(bytes) => Ok(json_response(bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(json_response("[]\n")),
        Err(e) => Err(internal(e)),
    })
    .await
}

async fn post_labels(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<StatusCode, ApiError> {
    let path = state.page_file(&id, dataset::LABELS_FILE)?;
    let records = parse_labels(&body).map_err(|reason| ApiError(StatusCode::BAD_REQUEST, reason))?;
    blocking(move || {
        let _guard = state.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        Ok(write_labels(&path, &records)?)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn predict(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let path = state.page_file(&id, dataset::PAGE_FILE)?;
    if state.extractor.is_none() {
        return Err(ApiError(StatusCode::SERVICE_UNAVAILABLE, "no model or extractor configured".into()));
    }
    let body = blocking(move || {
        let bytes = std::fs::read(&path).map_err(internal)?;
        let html = String::from_utf8_lossy(&bytes);
        let extractor = state.extractor.as_ref().expect("checked above");
        let predictions = extractor.predict_html(&html, state.viewport).map_err(internal)?;
        Ok(predictions_json(&predictions))
    })
    .await?;
    Ok(json_response(body))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/pages", get(list_pages))
        .route("/api/page/{id}", get(get_page))
        .route("/api/page/{id}/labels", get(get_labels).post(post_labels))
        .route("/api/predict/{id}", get(predict))
        .with_state(state)
}
