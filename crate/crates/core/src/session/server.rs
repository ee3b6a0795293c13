use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{build_plan, PhaseTimings};
use super::state::{Event, ReportedTimings, SessionState, Status, TrialRecord};
use crate::error::{Error, Result};
use crate::harness::{Corpus, ExperimentConfig};
use crate::pixel::io::encode_png;
use crate::rng::StreamKey;
use crate::spectral::{pink_noise_mask, MaskParams};
use crate::taxonomy::Category;
use crate::trial::to_csv_string;

/// Experiment given either as a preset name or in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigRef {
    Preset(String),
    Full(Box<ExperimentConfig>),
}

impl ConfigRef {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        match self {
            ConfigRef::Preset(name) => ExperimentConfig::preset(name),
            ConfigRef::Full(c) => Ok((**c).clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub config: ConfigRef,
    pub seed: u64,
    #[serde(default)]
    pub subject: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub trials: usize,
    pub practice_trials: usize,
    pub blocks: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextTrial {
    pub status: Status,
    pub trial_index: Option<usize>,
    pub is_practice: Option<bool>,
    pub block: Option<u32>,
    pub stimulus_url: Option<String>,
    pub mask_url: Option<String>,
    pub phase_timings: PhaseTimings,
    pub block_feedback: Option<f64>,
    pub background_grey: f64,
    pub response_grid: Vec<Category>,
    pub completed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialPost {
    pub trial_index: usize,
    pub response: Option<Category>,
    #[serde(default)]
    pub rt_ms: Option<u32>,
    #[serde(default)]
    pub reported_timings: Option<ReportedTimings>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialAck {
    pub trial_index: usize,
    pub duplicate: bool,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

struct HttpError(StatusCode, ApiError);

impl HttpError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        HttpError(status, ApiError { code: code.into(), message: message.into() })
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }
}

impl From<Error> for HttpError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::Session(_) => (StatusCode::CONFLICT, "conflict"),
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::InsufficientImages { .. } | Error::ChannelMismatch { .. } | Error::ShapeMismatch(_) => {
                (StatusCode::BAD_REQUEST, "invalid_request")
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        HttpError::new(status, code, e.to_string())
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> HttpResponse {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, HttpError>;

/// First line of a session's JSON-lines log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    pub subject: String,
    pub config: ExperimentConfig,
    pub seed: u64,
}

/// Reads a session log: header line followed by one event per line.
pub fn read_session_log(path: &Path) -> Result<(SessionHeader, Vec<Event>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header: SessionHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line.map_err(|e| Error::io(path, e))?)?,
        None => return Err(Error::parse("session log", "empty file")),
    };
    let mut events = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, events))
}

struct LiveSession {
    header: SessionHeader,
    state: SessionState,
    stimuli: Vec<Vec<u8>>,
    masks: Vec<Vec<u8>>,
    log: Option<(PathBuf, File)>,
    logged: usize,
}

impl LiveSession {
    fn flush_log(&mut self) -> Result<()> {
        if let Some((path, f)) = self.log.as_mut() {
            for e in &self.state.events()[self.logged..] {
                writeln!(f, "{}", serde_json::to_string(e)?).map_err(|err| Error::io(path.clone(), err))?;
            }
            f.flush().map_err(|err| Error::io(path.clone(), err))?;
        }
        self.logged = self.state.events().len();
        Ok(())
    }
}

/// Shared state of the session server.
pub struct AppState {
    corpus: Corpus,
    data_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
    counter: AtomicU64,
}

impl AppState {
    /// `data_dir`, when given, receives one append-only event log per session.
    pub fn new(corpus: Corpus, data_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState { corpus, data_dir, sessions: RwLock::new(HashMap::new()), counter: AtomicU64::new(0) })
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        self.sessions.read().expect("session map lock").get(id).cloned().ok_or_else(|| HttpError::not_found("session"))
    }

    fn create(&self, req: CreateSession) -> Result<SessionCreated> {
        let mut config = req.config.resolve()?;
        config.seed = req.seed;
        let plan = build_plan(&config, &self.corpus.labelled(), req.seed)?;
        let n = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
        let session_id = format!("s{n:04}");
        let params = MaskParams { mean_grey: self.corpus.mean_grey, ..MaskParams::default() };
        let mask_key = StreamKey(req.seed).child(0x6d61736b);
        let rendered: Vec<(Vec<u8>, Vec<u8>)> = plan
            .trials
            .par_iter()
            .map(|t| {
                let image = self.corpus.get(&t.image_id).expect("plan draws from the corpus");
                let (png, _) = self.corpus.render(image, &t.spec, config.side, req.seed)?;
                let (mask, _) = pink_noise_mask(config.side, mask_key.child(t.index as u64), true, &params)?;
                Ok((png, encode_png(&mask)?))
            })
            .collect::<Result<_>>()?;
        let (stimuli, masks) = rendered.into_iter().unzip();
        let header = SessionHeader { session_id: session_id.clone(), subject: req.subject.unwrap_or_else(|| session_id.clone()), config, seed: req.seed };
        let log = match &self.data_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join(format!("{session_id}.jsonl"));
                let mut f = OpenOptions::new().create_new(true).write(true).open(&path).map_err(|e| Error::io(&path, e))?;
                writeln!(f, "{}", serde_json::to_string(&header)?).map_err(|e| Error::io(&path, e))?;
                Some((path, f))
            }
            None => None,
        };
        let created = SessionCreated {
            session_id: session_id.clone(),
            trials: plan.trials.len(),
            practice_trials: plan.practice_count,
            blocks: plan.block_count(),
        };
        let live = LiveSession { header, state: SessionState::new(plan), stimuli, masks, log, logged: 0 };
        self.sessions.write().expect("session map lock").insert(session_id, Arc::new(Mutex::new(live)));
        Ok(created)
    }
}

async fn create_session(State(app): State<Arc<AppState>>, body: std::result::Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let Json(req) = body.map_err(|e| HttpError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let created = tokio::task::spawn_blocking(move || app.create(req))
        .await
        .map_err(|e| HttpError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_trial(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<NextTrial>> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session lock");
    let st = &s.state;
    let trial = st.plan().trials.get(st.cursor());
    Ok(Json(NextTrial {
        status: st.status(),
        trial_index: trial.map(|t| t.index),
        is_practice: trial.map(|t| t.is_practice),
        block: trial.map(|t| t.block),
        stimulus_url: trial.map(|t| format!("/stimuli/{id}-{:05}.png", t.index)),
        mask_url: trial.map(|t| format!("/stimuli/{id}-{:05}-mask.png", t.index)),
        phase_timings: st.plan().timing,
        block_feedback: st.block_feedback(),
        background_grey: app.corpus.mean_grey,
        response_grid: Category::RESPONSE_GRID.to_vec(),
        completed: st.records().len(),
        total: st.plan().trials.len(),
    }))
}

async fn post_trial(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: std::result::Result<Json<TrialPost>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Json<TrialAck>> {
    let Json(post) = body.map_err(|e| HttpError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let session = app.session(&id)?;
    let mut s = session.lock().expect("session lock");
    let (record, duplicate) = s.state.submit(post.trial_index, post.response, post.rt_ms, post.reported_timings)?;
    s.flush_log()?;
    Ok(Json(TrialAck { trial_index: post.trial_index, duplicate, record }))
}

async fn export_csv(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<HttpResponse> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session lock");
    let csv = to_csv_string(&s.state.to_rows(&s.header.subject, 1))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn stimulus(State(app): State<Arc<AppState>>, UrlPath(file): UrlPath<String>) -> ApiResult<HttpResponse> {
    let stem = file.strip_suffix(".png").ok_or_else(|| HttpError::not_found("stimulus"))?;
    let (stem, mask) = match stem.strip_suffix("-mask") {
        Some(s) => (s, true),
        None => (stem, false),
    };
    let (id, index) = stem.rsplit_once('-').ok_or_else(|| HttpError::not_found("stimulus"))?;
    let index: usize = index.parse().map_err(|_| HttpError::not_found("stimulus"))?;
    let session = app.session(id)?;
    let s = session.lock().expect("session lock");
    let store = if mask { &s.masks } else { &s.stimuli };
    let png = store.get(index).ok_or_else(|| HttpError::not_found("stimulus"))?.clone();
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn fallback() -> HttpError {
    HttpError::not_found("route")
}

/// HTTP routes of the trial API.
pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_trial))
        .route("/sessions/{id}/trials", post(post_trial))
        .route("/sessions/{id}/export.csv", get(export_csv))
        .route("/stimuli/{file}", get(stimulus))
        .fallback(fallback)
        .with_state(app)
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, app: Arc<AppState>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
    axum::serve(listener, router(app)).await.map_err(|e| Error::io(addr.to_string(), e))
}
