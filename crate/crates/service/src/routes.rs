use std::io::Cursor;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use afse_core::api::{
    AnnotationRequest, ExportQuery, FrameInfo, ReferenceRequest, SelectRequest, Status,
};
use afse_core::dataset::SelectionManifest;
use afse_core::pipeline::{
    prompt_export, representative_ids, score_frames, score_manifest, selection_manifest, with_jobs,
    ScoreConfig,
};
use afse_core::prompts::{ExportPrompt, PromptExport};
use afse_core::raster::load_image;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use crate::error::ApiError;
use crate::state::{AppState, SelectKey};

const THUMBNAIL_SIDE: u32 = 256;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub(crate) fn api() -> Router<Arc<AppState>> {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/frames", get(frames))
        .route("/api/frames/{id}/thumbnail", get(thumbnail))
        .route("/api/frames/{id}/image", get(image))
        .route("/api/reference", post(set_reference))
        .route("/api/scores", get(scores))
        .route("/api/select", post(select))
        .route("/api/prompts", get(annotations).post(annotate))
        .route("/api/prompts/{id}", delete(clear_annotation))
        .route("/api/export", get(export))
}

/// `Json` whose parse failures are plain 400s with an error body.
struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e: JsonRejection| ApiError::bad_request(e.body_text()))
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn status(State(state): Shared) -> Json<Status> {
    Json(state.status().await)
}

async fn frames(State(state): Shared) -> ApiResult<Json<Vec<FrameInfo>>> {
    let loaded = state.loaded()?;
    let list = loaded
        .manifest
        .frames
        .iter()
        .zip(&loaded.dims)
        .enumerate()
        .map(|(index, (f, &(width, height)))| FrameInfo {
            id: f.id.clone(),
            index,
            width,
            height,
            has_mask: f.mask_path.is_some(),
            thumbnail_url: format!("/api/frames/{}/thumbnail", f.id),
            image_url: format!("/api/frames/{}/image", f.id),
        })
        .collect();
    Ok(Json(list))
}

async fn thumbnail(State(state): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let index = state.frame_index(&id)?;
    let path = state.loaded()?.manifest.frames[index].image_path.clone();
    let png = tokio::task::spawn_blocking(move || -> ApiResult<Vec<u8>> {
        let mut img = load_image(&path)?.to_dynamic();
        if img.width().max(img.height()) > THUMBNAIL_SIDE {
            img = img.thumbnail(THUMBNAIL_SIDE, THUMBNAIL_SIDE);
        }
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| ApiError::internal(format!("encoding thumbnail: {e}")))?;
        Ok(out.into_inner())
    })
    .await??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png))
}

async fn image(State(state): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let index = state.frame_index(&id)?;
    let path = &state.loaded()?.manifest.frames[index].image_path;
    let bytes = tokio::fs::read(path)
        .await
        .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let mime = if ext == "png" {
        "image/png"
    } else {
        "image/jpeg"
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes))
}

/// Re-scores every frame against the new reference and drops selections
/// computed against the old one.
async fn set_reference(
    State(state): Shared,
    Body(req): Body<ReferenceRequest>,
) -> ApiResult<Json<SelectionManifest>> {
    let reference = state.frame_index(&req.frame_id)?;
    let _writer = state.writer.lock().await;
    let n = state.loaded()?.manifest.frames.len();
    state.progress.store(0, Ordering::Relaxed);
    state.progress_total.store(n, Ordering::Relaxed);
    state.running.store(true, Ordering::Relaxed);

    let worker = Arc::clone(&state);
    let scored = tokio::task::spawn_blocking(move || {
        let frames = &worker.loaded()?.manifest.frames;
        let params = &worker.config.score.params;
        with_jobs(worker.config.jobs, || {
            score_frames(frames, reference, params, Some(&worker.progress))
        })?
        .map_err(ApiError::from)
    })
    .await;
    state.running.store(false, Ordering::Relaxed);
    let features = Arc::new(scored??);

    let manifest = score_manifest(
        &state.loaded()?.manifest.frames,
        reference,
        &features,
        &state.config.score,
    );
    let mut session = state.session.write().await;
    session.reference = Some(reference);
    session.features = Some(features);
    session.selections.clear();
    session.latest = None;
    tracing::info!(reference = %req.frame_id, "reference set");
    Ok(Json(manifest))
}

async fn scores(State(state): Shared) -> ApiResult<Json<SelectionManifest>> {
    let frames = &state.loaded()?.manifest.frames;
    let session = state.session.read().await;
    let (Some(reference), Some(features)) = (session.reference, &session.features) else {
        return Err(ApiError::conflict("no reference frame set"));
    };
    Ok(Json(score_manifest(
        frames,
        reference,
        features,
        &state.config.score,
    )))
}

async fn select(
    State(state): Shared,
    Body(req): Body<SelectRequest>,
) -> ApiResult<Json<SelectionManifest>> {
    let n = state.loaded()?.manifest.frames.len();
    if req.k < 1 || req.k > n as i64 {
        return Err(ApiError::bad_request(format!(
            "k must be in 1..={n}, got {}",
            req.k
        )));
    }
    let cfg = ScoreConfig {
        params: state.config.score.params.clone(),
        weights: req.weights.unwrap_or(state.config.score.weights),
        normalize_features: req
            .normalize_features
            .unwrap_or(state.config.score.normalize_features),
    };
    cfg.weights.validate()?;
    let key = SelectKey {
        strategy: req.strategy,
        k: req.k as usize,
        seed: req.seed,
        weights: cfg.weights.as_array().map(f64::to_bits),
        normalize: cfg.normalize_features,
    };

    let _writer = state.writer.lock().await;
    let (reference, features) = {
        let session = state.session.read().await;
        match (session.reference, &session.features) {
            (Some(r), Some(f)) => {
                if let Some(hit) = session.selections.get(&key) {
                    let hit = hit.clone();
                    drop(session);
                    state.session.write().await.latest = Some(key);
                    return Ok(Json(hit));
                }
                (r, Arc::clone(f))
            }
            _ => return Err(ApiError::conflict("no reference frame set")),
        }
    };

    let worker = Arc::clone(&state);
    let manifest = tokio::task::spawn_blocking(move || {
        let frames = &worker.loaded()?.manifest.frames;
        selection_manifest(
            frames,
            reference,
            &features,
            &cfg,
            key.strategy,
            key.k,
            key.seed,
        )
        .map_err(ApiError::from)
    })
    .await??;

    let mut session = state.session.write().await;
    session.selections.insert(key, manifest.clone());
    session.latest = Some(key);
    Ok(Json(manifest))
}

async fn annotations(State(state): Shared) -> ApiResult<Json<Vec<ExportPrompt>>> {
    let frames = &state.loaded()?.manifest.frames;
    let session = state.session.read().await;
    let list = frames
        .iter()
        .filter_map(|f| session.annotations.get(&f.id).cloned())
        .collect();
    Ok(Json(list))
}

async fn annotate(
    State(state): Shared,
    Body(req): Body<AnnotationRequest>,
) -> ApiResult<Json<ExportPrompt>> {
    let index = state.frame_index(&req.frame_id)?;
    let (w, h) = state.loaded()?.dims[index];
    let prompt = req.validate(w, h).map_err(ApiError::bad_request)?;
    let _writer = state.writer.lock().await;
    state
        .session
        .write()
        .await
        .annotations
        .insert(prompt.frame_id.clone(), prompt.clone());
    Ok(Json(prompt))
}

async fn clear_annotation(
    State(state): Shared,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    state.frame_index(&id)?;
    let _writer = state.writer.lock().await;
    state.session.write().await.annotations.remove(&id);
    Ok(axum::http::StatusCode::NO_CONTENT)
}

/// Prompts for the representatives of the latest selection, with clinician
/// annotations taking precedence.
async fn export(
    State(state): Shared,
    q: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<Json<PromptExport>> {
    let q = query(q)?;
    state.loaded()?;
    let (targets, overrides) = {
        let session = state.session.read().await;
        let Some(selection) = session.latest.and_then(|k| session.selections.get(&k)) else {
            return Err(ApiError::conflict("no selection has been run"));
        };
        (representative_ids(selection), session.annotations.clone())
    };
    let worker = Arc::clone(&state);
    let export = tokio::task::spawn_blocking(move || -> ApiResult<PromptExport> {
        let frames = &worker.loaded()?.manifest.frames;
        Ok(prompt_export(
            frames, &targets, q.strategy, q.seed, &overrides,
        ))
    })
    .await??;
    Ok(Json(export))
}
