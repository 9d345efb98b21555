use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use afse_core::api::{Progress, Status};
use afse_core::dataset::{ingest, DatasetManifest, SelectionManifest};
use afse_core::pipeline::ScoreConfig;
use afse_core::prompts::ExportPrompt;
use afse_core::{FeatureVector, SplitMix64, Strategy};
use tokio::sync::{Mutex, RwLock};

use crate::error::ApiError;

/// Startup configuration of a review session.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub dataset: PathBuf,
    pub masks: Option<PathBuf>,
    pub score: ScoreConfig,
    /// Worker threads for scoring; the global pool when `None`.
    pub jobs: Option<usize>,
}

pub(crate) struct Loaded {
    pub manifest: DatasetManifest,
    pub dims: Vec<(u32, u32)>,
}

/// Everything that identifies one selection run. Weights are compared
/// bitwise so the key stays `Eq + Hash`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct SelectKey {
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub weights: [u64; 5],
    pub normalize: bool,
}

#[derive(Default)]
pub(crate) struct Session {
    pub reference: Option<usize>,
    pub features: Option<Arc<Vec<FeatureVector>>>,
    pub selections: HashMap<SelectKey, SelectionManifest>,
    pub latest: Option<SelectKey>,
    pub annotations: HashMap<String, ExportPrompt>,
}

/// Shared state of the single review session.
///
/// Reads take the `session` lock briefly. Mutations first take `writer`,
/// compute without holding `session`, then swap results in under a short
/// write lock, so readers never see a half-applied change.
pub struct AppState {
    pub(crate) session_id: String,
    pub(crate) config: ServiceConfig,
    dataset: OnceLock<Result<Loaded, String>>,
    pub(crate) session: RwLock<Session>,
    pub(crate) writer: Mutex<()>,
    pub(crate) progress: AtomicUsize,
    pub(crate) progress_total: AtomicUsize,
    pub(crate) running: AtomicBool,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let session_id = format!(
            "{:016x}",
            SplitMix64::new(nanos ^ std::process::id() as u64).next_u64()
        );
        Arc::new(Self {
            session_id,
            config,
            dataset: OnceLock::new(),
            session: RwLock::new(Session::default()),
            writer: Mutex::new(()),
            progress: AtomicUsize::new(0),
            progress_total: AtomicUsize::new(0),
            running: AtomicBool::new(false),
        })
    }

    /// Ingests the dataset and reads frame dimensions. Blocking; runs once,
    /// later calls return the first outcome.
    pub fn initialize(&self) -> Result<usize, String> {
        let outcome = self.dataset.get_or_init(|| {
            let ing = ingest(&self.config.dataset, self.config.masks.as_deref(), None)
                .map_err(|e| e.to_string())?;
            for w in &ing.warnings {
                tracing::warn!("{w}");
            }
            let dims = ing
                .manifest
                .frames
                .iter()
                .map(|f| {
                    image::image_dimensions(&f.image_path)
                        .map_err(|e| format!("{}: {e}", f.image_path.display()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Loaded {
                manifest: ing.manifest,
                dims,
            })
        });
        outcome
            .as_ref()
            .map(|l| l.manifest.frames.len())
            .map_err(Clone::clone)
    }

    pub(crate) fn loaded(&self) -> Result<&Loaded, ApiError> {
        match self.dataset.get() {
            None => Err(ApiError::unavailable("dataset is still loading")),
            Some(Err(e)) => Err(ApiError::unavailable(format!(
                "dataset failed to load: {e}"
            ))),
            Some(Ok(l)) => Ok(l),
        }
    }

    pub(crate) fn frame_index(&self, id: &str) -> Result<usize, ApiError> {
        self.loaded()?
            .manifest
            .index_of(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown frame `{id}`")))
    }

    pub async fn status(&self) -> Status {
        let session = self.session.read().await;
        let loaded = self.dataset.get();
        Status {
            session_id: self.session_id.clone(),
            ready: matches!(loaded, Some(Ok(_))),
            error: match loaded {
                Some(Err(e)) => Some(e.clone()),
                _ => None,
            },
            frame_count: match loaded {
                Some(Ok(l)) => l.manifest.frames.len(),
                _ => 0,
            },
            reference_id: match (loaded, session.reference) {
                (Some(Ok(l)), Some(i)) => Some(l.manifest.frames[i].id.clone()),
                _ => None,
            },
            scoring: Progress {
                done: self.progress.load(Ordering::Relaxed),
                total: self.progress_total.load(Ordering::Relaxed),
                running: self.running.load(Ordering::Relaxed),
            },
            has_selection: session.latest.is_some(),
            annotations: session.annotations.len(),
        }
    }
}
