//! HTTP front end of an annotation study.
//!
//! | route | |
//! |---|---|
//! | `GET /api/next-task?annotator=ID&mode=rating\|pair` | assign or re-send a task |
//! | `GET /api/video/{id}` | clip frames as base64 RGB |
//! | `POST /api/rating` | `{annotator, video_id, scores: {static: 1..5, ..}}` |
//! | `POST /api/pair` | `{annotator, pair_id, choices: {static: "A"\|"B", ..}}` |
//! | `GET /api/progress` | rating and judgment counts |
//!
//! Everything else is served from the static directory. All state changes
//! go through one lock.

pub mod study;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::store::read_avf_raw;
pub use study::{Counts, Mode, Progress, Study, StudyConfig, StudyError, SubmitError, Task, TaskPayload, TaskState};

pub const DEFAULT_PORT: u16 = 8080;

type Shared = Arc<Mutex<Study>>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    kind: &'a str,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "BadRequest",
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "Internal",
            message: message.into(),
        }
    }
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        let (status, kind) = match &e {
            StudyError::NoTasksRemaining(_) => (StatusCode::NOT_FOUND, "NoTasksRemaining"),
            StudyError::NotFound(_) => (StatusCode::NOT_FOUND, "NotFound"),
            StudyError::TaskNotAssigned => (StatusCode::CONFLICT, "TaskNotAssigned"),
            StudyError::InvalidScore(_) => (StatusCode::BAD_REQUEST, "InvalidScore"),
            StudyError::InvalidChoice(_) => (StatusCode::BAD_REQUEST, "InvalidChoice"),
        };
        ApiError {
            status,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        match e {
            SubmitError::Study(e) => e.into(),
            SubmitError::Storage(e) => ApiError::internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: &self.message,
                kind: self.kind,
            }),
        )
            .into_response()
    }
}

fn lock(state: &Shared) -> std::sync::MutexGuard<'_, Study> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Deserialize)]
struct NextTaskQuery {
    annotator: Option<String>,
    mode: Option<String>,
}

async fn next_task(State(state): State<Shared>, Query(q): Query<NextTaskQuery>) -> Result<Json<Task>, ApiError> {
    let annotator = q
        .annotator
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ApiError::bad_request("missing annotator"))?;
    let mode = match q.mode.as_deref() {
        Some("rating") => Mode::Rating,
        Some("pair") => Mode::Pair,
        other => {
            return Err(ApiError::bad_request(format!(
                "mode must be rating or pair, got {other:?}"
            )))
        }
    };
    Ok(Json(lock(&state).next_task(&annotator, mode)?))
}

/// Frames of one clip, each the raw interleaved RGB bytes in base64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPayload {
    pub t: u32,
    pub h: u32,
    pub w: u32,
    pub fps: f32,
    pub frames: Vec<String>,
}

async fn video(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<VideoPayload>, ApiError> {
    let path = lock(&state).clip_path(&id)?;
    let (header, payload) = read_avf_raw(&path).map_err(|e| ApiError::internal(e.to_string()))?;
    let frame_len = header.frame_len().expect("validated header");
    let frames = if frame_len == 0 {
        vec![String::new(); header.frames as usize]
    } else {
        payload.chunks(frame_len).map(|f| STANDARD.encode(f)).collect()
    };
    Ok(Json(VideoPayload {
        t: header.frames,
        h: header.height,
        w: header.width,
        fps: header.fps,
        frames,
    }))
}

#[derive(Deserialize)]
struct RatingBody {
    annotator: String,
    video_id: String,
    scores: BTreeMap<String, i64>,
}

#[derive(Deserialize)]
struct PairBody {
    annotator: String,
    pair_id: String,
    choices: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
    pub records: usize,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn rating(State(state): State<Shared>, body: Bytes) -> Result<Json<Ack>, ApiError> {
    let b: RatingBody = parse_body(&body)?;
    let records = lock(&state).submit_rating(&b.annotator, &b.video_id, &b.scores)?;
    Ok(Json(Ack { ok: true, records }))
}

async fn pair(State(state): State<Shared>, body: Bytes) -> Result<Json<Ack>, ApiError> {
    let b: PairBody = parse_body(&body)?;
    let records = lock(&state).submit_pair(&b.annotator, &b.pair_id, &b.choices)?;
    Ok(Json(Ack { ok: true, records }))
}

async fn progress(State(state): State<Shared>) -> Json<Progress> {
    Json(lock(&state).progress().clone())
}

pub fn router(study: Study, static_dir: &Path) -> Router {
    let state: Shared = Arc::new(Mutex::new(study));
    Router::new()
        .route("/api/next-task", get(next_task))
        .route("/api/video/{id}", get(video))
        .route("/api/rating", post(rating))
        .route("/api/pair", post(pair))
        .route("/api/progress", get(progress))
        .fallback_service(ServeDir::new(static_dir))
        .with_state(state)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
