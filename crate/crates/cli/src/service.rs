//! JSON-over-HTTP tuning service. Sessions hold an uploaded page and its
//! settings; previews run on a downscaled copy and are superseded by newer
//! requests; `accept` recomputes at full resolution and writes the same
//! bundle `gen-gt` would.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use docrestore::gmm::{fit_em_3d, identify_roles, subsample, EmConfig};
use docrestore::image::{downscale_to_fit, histogram};
use docrestore::morpho::moving_average_threshold;
use docrestore::pipeline::BUNDLE_FILES;
use docrestore::pnm::{decode_pnm, encode_mask, encode_ppm};
use docrestore::ColorImage;

use crate::commands::{groundtruth_bundle, write_bundle};
use crate::config::Settings;

/// Longest preview edge in pixels.
pub const PREVIEW_EDGE: usize = 768;
const BODY_LIMIT: usize = 256 << 20;

pub struct Session {
    image: ColorImage,
    preview: ColorImage,
    settings: Settings,
    latest_seq: AtomicU64,
    in_flight: Mutex<()>,
}

pub struct AppState {
    base: Settings,
    sessions: RwLock<HashMap<u64, Arc<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(base: Settings) -> Self {
        Self { base, sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }

    fn session(&self, id: u64) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, e.to_string())
}

fn unprocessable(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
}

fn with_overrides(base: &Settings, overrides: &BTreeMap<String, String>) -> Result<Settings, ApiError> {
    let mut s = base.clone();
    for (k, v) in overrides {
        s.set(k, v).map_err(bad_request)?;
    }
    s.validate().map_err(bad_request)?;
    Ok(s)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Deserialize)]
pub struct CreateSession {
    /// Base64 of a binary PPM or PGM file.
    pub image: String,
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: u64,
    pub width: usize,
    pub height: usize,
}

async fn create_session(State(state): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let settings = with_overrides(&state.base, &req.settings)?;
    let bytes = STANDARD.decode(req.image.as_bytes()).map_err(|e| bad_request(format!("image is not base64: {e}")))?;
    let (image, preview) = blocking(move || {
        let image = decode_pnm(&bytes).map_err(bad_request)?.into_color();
        let preview = downscale_to_fit(&image, PREVIEW_EDGE).map_err(unprocessable)?;
        Ok((image, preview))
    })
    .await?;
    let (width, height) = (image.width(), image.height());
    let id = state.next_id.fetch_add(1, Ordering::SeqCst);
    let session = Session { image, preview, settings, latest_seq: AtomicU64::new(0), in_flight: Mutex::new(()) };
    state.sessions.write().expect("session map poisoned").insert(id, Arc::new(session));
    Ok((StatusCode::CREATED, Json(SessionCreated { id, width, height })))
}

#[derive(Serialize, Deserialize)]
pub struct HistogramReply {
    pub bins: Vec<u64>,
    /// Valley of the smoothed histogram, when one exists.
    pub valley: Option<u8>,
}

async fn session_histogram(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<Json<HistogramReply>, ApiError> {
    let session = state.session(id)?;
    blocking(move || {
        let gray = session.settings.preprocess().map_err(bad_request)?.apply(&session.image).map_err(unprocessable)?;
        let h = histogram(&gray);
        let window: usize = session.settings.get("valley.window").and_then(|v| v.parse().ok()).unwrap_or(11);
        let valley = moving_average_threshold(&h, window).ok();
        Ok(Json(HistogramReply { bins: h.bins.to_vec(), valley }))
    })
    .await
}

#[derive(Deserialize)]
pub struct GmmRequest {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
pub struct ComponentReply {
    pub prior: f64,
    pub mean: [f64; 3],
    pub role: String,
}

#[derive(Serialize, Deserialize)]
pub struct GmmReply {
    pub components: Vec<ComponentReply>,
    pub iterations: usize,
    pub log_likelihood: f64,
}

async fn session_gmm(State(state): State<Arc<AppState>>, Path(id): Path<u64>, Json(req): Json<GmmRequest>) -> Result<Json<GmmReply>, ApiError> {
    let session = state.session(id)?;
    blocking(move || {
        let bg = session.settings.background_params().map_err(bad_request)?;
        let pixels: Vec<[f64; 3]> = session.image.pixels().collect();
        let samples = subsample(&pixels, bg.sample_cap, req.seed);
        let cfg = EmConfig { k: req.k, seed: req.seed, max_iter: bg.max_iter, tol: bg.tol };
        let (model, trace) = fit_em_3d(&samples, &cfg).map_err(unprocessable)?;
        let roles = identify_roles(&model).map_err(|e| unprocessable(format!("cannot separate text from background: {e}")))?;
        let role = |i: usize| {
            if i == roles.background {
                "background"
            } else if i == roles.text {
                "text"
            } else if Some(i) == roles.scanner_white {
                "scanner_white"
            } else {
                "noise"
            }
        };
        let components = model
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| ComponentReply { prior: c.prior, mean: c.mean, role: role(i).into() })
            .collect();
        Ok(Json(GmmReply {
            components,
            iterations: trace.iterations,
            log_likelihood: trace.log_likelihood.last().copied().unwrap_or(f64::NAN),
        }))
    })
    .await
}

#[derive(Deserialize)]
pub struct PreviewRequest {
    pub seq: u64,
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct PreviewReply {
    pub seq: u64,
    pub superseded: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub images: Option<PreviewImages>,
}

/// Base64 PNM payloads.
#[derive(Serialize, Deserialize, Debug)]
pub struct PreviewImages {
    pub width: usize,
    pub height: usize,
    pub text: String,
    pub foreground: String,
    pub background: String,
    pub restored: String,
}

async fn session_preview(State(state): State<Arc<AppState>>, Path(id): Path<u64>, Json(req): Json<PreviewRequest>) -> Result<Json<PreviewReply>, ApiError> {
    let session = state.session(id)?;
    let settings = with_overrides(&session.settings, &req.settings)?;
    let seq = req.seq;
    let stale = |s: &Session| s.latest_seq.load(Ordering::SeqCst) > seq;
    let superseded = Json(PreviewReply { seq, superseded: true, images: None });
    if session.latest_seq.fetch_max(seq, Ordering::SeqCst) > seq {
        return Ok(superseded);
    }
    let _turn = session.in_flight.lock().await;
    if stale(&session) {
        return Ok(superseded);
    }
    let worker = session.clone();
    let images = blocking(move || {
        let b = groundtruth_bundle(&worker.preview, &settings).map_err(|e| unprocessable(format!("{e:#}")))?;
        let enc = |bytes: Vec<u8>| STANDARD.encode(bytes);
        Ok(PreviewImages {
            width: b.binarized_text.width(),
            height: b.binarized_text.height(),
            text: enc(encode_mask(&b.binarized_text)),
            foreground: enc(encode_ppm(&b.restored_foreground)),
            background: enc(encode_ppm(&b.restored_background)),
            restored: enc(encode_ppm(&b.restored_document)),
        })
    })
    .await?;
    if stale(&session) {
        return Ok(superseded);
    }
    Ok(Json(PreviewReply { seq, superseded: false, images: Some(images) }))
}

#[derive(Deserialize)]
pub struct AcceptRequest {
    pub out_path: PathBuf,
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
pub struct AcceptReply {
    pub out_path: PathBuf,
    pub files: Vec<String>,
}

async fn session_accept(State(state): State<Arc<AppState>>, Path(id): Path<u64>, Json(req): Json<AcceptRequest>) -> Result<Json<AcceptReply>, ApiError> {
    let session = state.session(id)?;
    let settings = with_overrides(&session.settings, &req.settings)?;
    blocking(move || {
        let bundle = groundtruth_bundle(&session.image, &settings).map_err(|e| unprocessable(format!("{e:#}")))?;
        write_bundle(&bundle, &req.out_path).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("{e:#}")))?;
        Ok(Json(AcceptReply { out_path: req.out_path, files: BUNDLE_FILES.iter().map(|s| s.to_string()).collect() }))
    })
    .await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/histogram", get(session_histogram))
        .route("/session/{id}/gmm", post(session_gmm))
        .route("/session/{id}/preview", post(session_preview))
        .route("/session/{id}/accept", post(session_accept))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, base: Settings) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(AppState::new(base)))).await
}
