use std::sync::MutexGuard;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use pubdev_core::triage::{CombinedMetrics, ItemStatus, QueueItem, TriageSession};
use pubdev_core::{Class, Decision, Error};

use crate::AppState;

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>triage</title></head>
<body><p>No UI bundle configured. The review API is served under <code>/api</code>.</p></body></html>
";

/// A queued project as shown to the reviewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub project_id: String,
    pub description: Option<String>,
    pub url: String,
    pub language: Option<String>,
    pub star: u64,
    pub watcher: u64,
    pub committer: u64,
    pub community: u64,
    pub auto_class: Class,
    pub leaf_id: usize,
    pub status: ItemStatus,
    pub criteria_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub project_id: String,
    pub decision: String,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub ok: bool,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsView {
    pub effort: f64,
    pub pending: usize,
    pub undecided: usize,
    /// Absent when the session carries no truth labels.
    pub combined: Option<CombinedMetrics>,
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/session", get(session_summary))
        .route("/api/next", get(next_item))
        .route("/api/item/{id}", get(item))
        .route("/api/label", post(label))
        .route("/api/metrics", get(metrics))
        .route("/api/export", get(export));
    let ui = state.ui_dir.clone().filter(|d| d.is_dir());
    let app = match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    };
    app.with_state(state)
}

fn lock(state: &AppState) -> MutexGuard<'_, TriageSession> {
    state.session.lock().unwrap_or_else(|p| p.into_inner())
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn view(session: &TriageSession, q: &QueueItem) -> ItemView {
    let r = &q.record;
    ItemView {
        project_id: r.project_id.clone(),
        description: r.description.clone(),
        url: r.url.clone(),
        language: r.language.clone(),
        star: r.star_count,
        watcher: r.watcher_count,
        committer: r.committer_count,
        community: r.community_count,
        auto_class: q.auto_class,
        leaf_id: q.leaf_id,
        status: session.status(&r.project_id).unwrap_or(ItemStatus::Pending),
        criteria_text: session.criteria_text().to_owned(),
    }
}

async fn session_summary(State(state): State<AppState>) -> Response {
    Json(lock(&state).summary()).into_response()
}

async fn next_item(State(state): State<AppState>) -> Response {
    let session = lock(&state);
    match session.next_pending() {
        Some(q) => Json(json!({ "empty": false, "item": view(&session, q) })).into_response(),
        None => Json(json!({ "empty": true })).into_response(),
    }
}

async fn item(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let session = lock(&state);
    match session.item(&id) {
        Some(q) => Json(view(&session, q)).into_response(),
        None => error_response(
            StatusCode::NOT_FOUND,
            format!("project `{id}` is not in the review queue"),
        ),
    }
}

async fn label(State(state): State<AppState>, Json(req): Json<LabelRequest>) -> Response {
    let decision: Decision = match req.decision.parse() {
        Ok(d) => d,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let mut session = lock(&state);
    match session.record_decision(&req.project_id, decision, req.note) {
        Ok(_) => Json(LabelResponse {
            ok: true,
            pending: session.summary().pending,
        })
        .into_response(),
        Err(e @ Error::NotQueued(_)) => error_response(StatusCode::NOT_FOUND, e.to_string()),
        Err(e) => {
            log::error!("recording decision for {}: {e}", req.project_id);
            error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

async fn metrics(State(state): State<AppState>) -> Response {
    let session = lock(&state);
    let summary = session.summary();
    Json(MetricsView {
        effort: summary.effort,
        pending: summary.pending,
        undecided: summary.undecided,
        combined: session.metrics(),
    })
    .into_response()
}

async fn export(State(state): State<AppState>) -> Response {
    let session = lock(&state);
    let mut body = String::new();
    for rec in session.export_records() {
        body.push_str(&serde_json::to_string(&rec).expect("label record serializes"));
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}
