//! Local HTTP backend for the labeling and analysis UI.
//!
//! One process serves one dataset root. Routes:
//!
//! | method | path                          |                                  |
//! |--------|-------------------------------|----------------------------------|
//! | GET    | `/api/dataset`                | catalog, labels, validation      |
//! | GET    | `/api/tracks/{id}/audio`      | WAV bytes, honours `Range`       |
//! | PUT    | `/api/tracks/{id}/label`      | `{"label": "M"}`                 |
//! | POST   | `/api/analyses`               | start a job, returns `{"id"}`    |
//! | GET    | `/api/analyses/{id}`          | job status and progress          |
//! | GET    | `/api/analyses/{id}/report`   | canonical report JSON            |
//!
//! Analyses run off the async runtime, at most `workers` at a time.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use embalign_core::dataset::{parse_track_id, validate_dataset, ValidationReport};
use embalign_core::ingest::{labels_path, scan_recordings_dir};
use embalign_core::pipeline::{now_rfc3339, run_analysis, total_pairs, RunOptions};
use embalign_core::report::to_canonical_json;
use embalign_core::{AnalysisConfig, CongruenceLabel, Dataset, TrackId};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;
use tower::ServiceExt as _;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::{ServeDir, ServeFile};

mod error;
mod jobs;
mod store;

pub use error::ApiError;
pub use jobs::{Job, JobOutcome, JobRegistry, JobStatus};
pub use store::LabelStore;

pub const DEFAULT_PORT: u16 = 8734;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub root: PathBuf,
    /// Built UI assets served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Analyses allowed to run at once.
    pub workers: usize,
    /// Pair-test threads per analysis; `None` uses all cores.
    pub threads: Option<usize>,
    /// Stamped into reports whose request carries no timestamp.
    pub timestamp: String,
}

impl ServiceConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), ui_dir: None, workers: 2, threads: None, timestamp: now_rfc3339() }
    }
}

pub struct AppState {
    config: ServiceConfig,
    labels: LabelStore,
    jobs: JobRegistry,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            labels: LabelStore::new(labels_path(&config.root)),
            jobs: JobRegistry::default(),
            workers: Arc::new(Semaphore::new(config.workers.max(1))),
            config,
        }
    }

    fn scan(&self) -> Result<Dataset, ApiError> {
        scan_recordings_dir(&self.config.root).map_err(|e| ApiError::internal(e.to_string()))
    }
}

type Shared = Arc<AppState>;

pub fn router(config: ServiceConfig) -> Router {
    let ui_dir = config.ui_dir.clone();
    let state = Arc::new(AppState::new(config));
    let api = Router::new()
        .route("/api/dataset", get(get_dataset))
        .route("/api/tracks/{id}/audio", get(get_audio))
        .route("/api/tracks/{id}/label", put(put_label))
        .route("/api/analyses", post(post_analysis))
        .route("/api/analyses/{id}", get(get_job))
        .route("/api/analyses/{id}/report", get(get_report))
        .with_state(state);
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors())
}

/// Browsers may call the API from pages served on this machine.
fn cors() -> CorsLayer {
    CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin: &HeaderValue, _| is_local_origin(origin.as_bytes())))
        .allow_methods([Method::GET, Method::PUT, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::RANGE])
}

fn is_local_origin(origin: &[u8]) -> bool {
    let Ok(origin) = std::str::from_utf8(origin) else {
        return false;
    };
    let host = origin.strip_prefix("http://").or_else(|| origin.strip_prefix("https://")).unwrap_or("");
    let host = host.rsplit_once(':').map_or(host, |(h, port)| if port.parse::<u16>().is_ok() { h } else { host });
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

/// Binds `127.0.0.1:port` and serves until the process ends.
pub async fn serve(config: ServiceConfig, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config)).await
}

#[derive(Debug, Serialize)]
pub struct TrackSummary {
    pub id: TrackId,
    pub label: Option<CongruenceLabel>,
    pub has_audio: bool,
    pub has_embedding: bool,
}

#[derive(Debug, Serialize)]
pub struct RecordingSummary {
    pub recording: u32,
    pub tracks: Vec<TrackSummary>,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub recordings: Vec<RecordingSummary>,
    pub validation: ValidationReport,
}

impl DatasetSummary {
    pub fn of(d: &Dataset) -> Self {
        let recordings = d
            .recordings
            .iter()
            .map(|(&recording, tracks)| RecordingSummary {
                recording,
                tracks: tracks
                    .iter()
                    .map(|&id| TrackSummary {
                        id,
                        label: d.labels.get(&id).copied(),
                        has_audio: d.audio_paths.contains_key(&id),
                        has_embedding: d.embedding_paths.contains_key(&id),
                    })
                    .collect(),
            })
            .collect();
        Self { recordings, validation: validate_dataset(d) }
    }
}

async fn get_dataset(State(state): State<Shared>) -> Result<Json<DatasetSummary>, ApiError> {
    Ok(Json(DatasetSummary::of(&state.scan()?)))
}

fn known_track(d: &Dataset, id: &str) -> Result<TrackId, ApiError> {
    parse_track_id(id)
        .ok()
        .filter(|&t| d.contains(t))
        .ok_or_else(|| ApiError::not_found(format!("unknown track {id}")))
}

async fn get_audio(State(state): State<Shared>, UrlPath(id): UrlPath<String>, req: Request) -> Result<Response, ApiError> {
    let d = state.scan()?;
    let track = known_track(&d, &id)?;
    let path = d.audio_paths.get(&track).ok_or_else(|| ApiError::not_found(format!("{track} has no audio")))?;
    let served = ServeFile::new_with_mime(path, &"audio/wav".parse().expect("valid mime"))
        .oneshot(req)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(served.map(Body::new))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    label: String,
}

async fn put_label(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<LabelBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let d = state.scan()?;
    let track = known_track(&d, &id)?;
    let label = CongruenceLabel::from_code(&body.label).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let store = Arc::clone(&state);
    tokio::task::spawn_blocking(move || store.labels.set(track, label))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "id": track, "label": label })))
}

/// `POST /api/analyses` body: an [`AnalysisConfig`] (missing fields take
/// their defaults) and an optional report timestamp.
#[derive(Debug, Deserialize)]
pub struct AnalysisRequest {
    #[serde(flatten)]
    pub config: AnalysisConfig,
    #[serde(default)]
    pub timestamp: Option<String>,
}

async fn post_analysis(
    State(state): State<Shared>,
    Json(request): Json<AnalysisRequest>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let cfg = request.config;
    cfg.validate().map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let dataset = state.scan()?;
    let validation = validate_dataset(&dataset);
    if validation.has_errors() {
        let mut err = ApiError::new(StatusCode::CONFLICT, "dataset has validation errors");
        err.issues = validation.errors().cloned().collect();
        return Err(err);
    }
    let timestamp = request.timestamp.unwrap_or_else(|| state.config.timestamp.clone());
    let job = state.jobs.create(cfg, timestamp, total_pairs(&dataset));
    let id = job.id.clone();
    let workers = Arc::clone(&state.workers);
    let threads = state.config.threads;
    tokio::spawn(async move {
        let Ok(_permit) = workers.acquire_owned().await else {
            return;
        };
        job.start();
        let worker = Arc::clone(&job);
        let result = tokio::task::spawn_blocking(move || {
            let progress = |done: usize, _total: usize| worker.record_progress(done);
            let options = RunOptions { threads, progress: Some(&progress) };
            run_analysis(&dataset, &worker.config, &options, worker.timestamp.clone())
        })
        .await;
        let outcome = match result {
            Ok(Ok(report)) => match to_canonical_json(&report) {
                Ok(canonical) => JobOutcome::Done { report, canonical },
                Err(e) => JobOutcome::Failed(e.to_string()),
            },
            Ok(Err(e)) => JobOutcome::Failed(e.to_string()),
            Err(e) => JobOutcome::Failed(format!("analysis task failed: {e}")),
        };
        job.finish(outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "id": id }))))
}

fn find_job(state: &AppState, id: &str) -> Result<Arc<Job>, ApiError> {
    state.jobs.get(id).ok_or_else(|| ApiError::not_found(format!("unknown job {id}")))
}

async fn get_job(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let job = find_job(&state, &id)?;
    Ok(Json(job.view()).into_response())
}

async fn get_report(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let job = find_job(&state, &id)?;
    match job.outcome() {
        Some(JobOutcome::Done { canonical, .. }) => {
            Ok(([(header::CONTENT_TYPE, "application/json")], canonical.clone()).into_response())
        }
        Some(JobOutcome::Failed(e)) => Err(ApiError::internal(format!("job {id} failed: {e}"))),
        None => Err(ApiError::new(StatusCode::CONFLICT, format!("job {id} is {:?}", job.status()))),
    }
}
