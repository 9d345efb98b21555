//! End-to-end stages shared by the CLI and the review service: scoring a
//! frame list against a reference, running a selection strategy, and
//! deriving the prompt export for the chosen frames.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::dataset::{FrameEntry, FrameRow, SelectionManifest, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureParams, FeatureVector, ReferenceProfile};
use crate::prompts::{
    derive_prompts, frame_seed, ExportPrompt, PromptExport, PromptStrategy, SkippedFrame,
    EXPORT_VERSION,
};
use crate::raster::{load_image, load_mask};
use crate::selection::{composite_score, normalize_features, run_strategy, Strategy, WeightConfig};

/// Resolves the reference frame; frame 0 when none is given.
pub fn resolve_reference(frames: &[FrameEntry], reference: Option<&str>) -> Result<usize> {
    if frames.is_empty() {
        return Err(Error::Dataset("no frames to score".into()));
    }
    match reference {
        None => Ok(0),
        Some(id) => frames
            .iter()
            .position(|f| f.id == id)
            .ok_or_else(|| Error::UnknownFrame(id.to_string())),
    }
}

/// Runs `f` on a dedicated pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Features of every frame against `frames[reference]`. Frames are decoded
/// one at a time inside the workers, so memory stays bounded by the number
/// of threads. Results are in frame order regardless of completion order.
pub fn score_frames(
    frames: &[FrameEntry],
    reference: usize,
    params: &FeatureParams,
    progress: Option<&AtomicUsize>,
) -> Result<Vec<FeatureVector>> {
    params.validate()?;
    let reference_img = load_image(&frames[reference].image_path)?;
    let profile = ReferenceProfile::new(&reference_img, params)?;
    drop(reference_img);
    frames
        .par_iter()
        .map(|f| {
            let img = load_image(&f.image_path)?;
            let fv = extract_features(&img, &profile, params).map_err(|e| match e {
                Error::ZeroIntensity | Error::TooSmall { .. } => {
                    Error::Dataset(format!("frame `{}`: {e}", f.id))
                }
                other => other,
            });
            if let Some(p) = progress {
                p.fetch_add(1, Ordering::Relaxed);
            }
            fv
        })
        .collect()
}

/// Everything a scoring or selection run is configured by.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreConfig {
    pub params: FeatureParams,
    pub weights: WeightConfig,
    pub normalize_features: bool,
}

/// Manifest with features and composite scores only.
pub fn score_manifest(
    frames: &[FrameEntry],
    reference: usize,
    features: &[FeatureVector],
    cfg: &ScoreConfig,
) -> SelectionManifest {
    let weighted = if cfg.normalize_features {
        normalize_features(features)
    } else {
        features.to_vec()
    };
    let rows = frames
        .iter()
        .zip(features)
        .zip(&weighted)
        .map(|((f, fv), w)| FrameRow {
            id: f.id.clone(),
            features: *fv,
            score: composite_score(w, &cfg.weights),
            cluster: None,
            distance: None,
            is_representative: false,
            rank: None,
        })
        .collect();
    SelectionManifest {
        version: MANIFEST_VERSION.into(),
        strategy: None,
        reference_id: frames[reference].id.clone(),
        weights: cfg.weights,
        feature_params: cfg.params.clone(),
        normalize_features: cfg.normalize_features,
        k: None,
        seed: None,
        frames: rows,
        extra: BTreeMap::new(),
    }
}

/// Manifest with clusters, representatives and proximity ranks filled in.
/// `F` holds the score the strategy clustered on.
pub fn selection_manifest(
    frames: &[FrameEntry],
    reference: usize,
    features: &[FeatureVector],
    cfg: &ScoreConfig,
    strategy: Strategy,
    k: usize,
    seed: u64,
) -> Result<SelectionManifest> {
    let run = run_strategy(
        strategy,
        features,
        &cfg.weights,
        cfg.normalize_features,
        k,
        seed,
    )?;
    let mut manifest = score_manifest(frames, reference, features, cfg);
    manifest.strategy = Some(strategy);
    manifest.k = Some(k);
    manifest.seed = Some(seed);
    let mut rank = vec![None; frames.len()];
    for (r, &i) in run.selection.ranking.iter().enumerate() {
        rank[i] = Some(r + 1);
    }
    for (i, row) in manifest.frames.iter_mut().enumerate() {
        row.score = run.scores[i];
        row.cluster = Some(run.model.assignment[i]);
        row.distance = Some(run.selection.distances[i]);
        row.is_representative = run.selection.representatives.contains(&i);
        row.rank = rank[i];
    }
    manifest.validate()?;
    Ok(manifest)
}

/// Prompts for the given frames under one strategy. Frames without a mask
/// or whose mask cannot satisfy the strategy are listed as skipped.
/// `overrides` replace the derived prompt of a frame, and override frames
/// outside `targets` are appended; all output follows frame order.
pub fn prompt_export(
    frames: &[FrameEntry],
    targets: &[String],
    strategy: PromptStrategy,
    seed: u64,
    overrides: &HashMap<String, ExportPrompt>,
) -> PromptExport {
    let results: Vec<(usize, std::result::Result<ExportPrompt, String>)> = frames
        .par_iter()
        .enumerate()
        .filter(|(_, f)| targets.contains(&f.id) || overrides.contains_key(&f.id))
        .map(|(i, f)| {
            if let Some(o) = overrides.get(&f.id) {
                return (i, Ok(o.clone()));
            }
            let derived = match &f.mask_path {
                None => Err("no mask".to_string()),
                Some(p) => load_mask(p)
                    .and_then(|m| derive_prompts(&f.id, &m, strategy, frame_seed(seed, i)))
                    .map(|spec| ExportPrompt::from(&spec))
                    .map_err(|e| e.to_string()),
            };
            (i, derived)
        })
        .collect();

    let mut prompts = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results {
        match r {
            Ok(p) => prompts.push(p),
            Err(reason) => skipped.push(SkippedFrame {
                frame_id: frames[i].id.clone(),
                reason,
            }),
        }
    }
    PromptExport {
        version: EXPORT_VERSION.into(),
        strategy,
        seed,
        prompts,
        skipped,
    }
}

/// Ids of the frames flagged representative in a manifest.
pub fn representative_ids(manifest: &SelectionManifest) -> Vec<String> {
    manifest
        .representatives()
        .into_iter()
        .map(|r| r.id.clone())
        .collect()
}
