//! Dataset ingestion, the seeded train/validation split, and the versioned
//! JSON manifests exchanged between pipeline stages.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::features::{FeatureParams, FeatureVector};
use crate::rng::SplitMix64;
use crate::selection::{Strategy, WeightConfig};

pub const MANIFEST_VERSION: &str = "1";
pub const DEFAULT_SPLIT_RATIO: f64 = 0.7;
pub const DEFAULT_SPLIT_SEED: u64 = 2024;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub(crate) fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Supported image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub id: String,
    pub image_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSelection {
    #[default]
    All,
    Train,
    Val,
}

impl FromStr for SplitSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "train" => Ok(Self::Train),
            "val" => Ok(Self::Val),
            other => Err(Error::InvalidParameter(format!(
                "unknown split `{other}` (expected all, train or val)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    #[serde(default)]
    pub modality: Option<String>,
    pub frames: Vec<FrameEntry>,
    pub split: Split,
    pub split_seed: u64,
    pub split_ratio: f64,
    /// Fields written by newer tools; kept verbatim on re-save.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl DatasetManifest {
    pub fn ids(&self) -> Vec<String> {
        self.frames.iter().map(|f| f.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.frames.iter().position(|f| f.id == id)
    }

    /// Frames in manifest order restricted to a split.
    pub fn select(&self, which: SplitSelection) -> Vec<FrameEntry> {
        let keep: Option<&Vec<String>> = match which {
            SplitSelection::All => None,
            SplitSelection::Train => Some(&self.split.train),
            SplitSelection::Val => Some(&self.split.val),
        };
        self.frames
            .iter()
            .filter(|f| keep.is_none_or(|k| k.contains(&f.id)))
            .cloned()
            .collect()
    }
}

/// Result of [`ingest`]: the manifest plus human-readable pairing warnings.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub manifest: DatasetManifest,
    pub warnings: Vec<String>,
}

/// Scans `dir` for PNG/JPEG frames (sorted by file name) and pairs masks in
/// `mask_dir` by file stem.
pub fn ingest(dir: &Path, mask_dir: Option<&Path>, modality: Option<String>) -> Result<Ingested> {
    let images = list_images(dir)?;
    if images.is_empty() {
        return Err(Error::Dataset(format!(
            "no PNG or JPEG images in {}",
            dir.display()
        )));
    }
    let mut seen = HashMap::new();
    for p in &images {
        if let Some(prev) = seen.insert(stem_of(p), p.clone()) {
            return Err(Error::Dataset(format!(
                "duplicate frame id `{}` ({} and {})",
                stem_of(p),
                prev.display(),
                p.display()
            )));
        }
    }

    let mut warnings = Vec::new();
    let mut masks: BTreeMap<String, PathBuf> = BTreeMap::new();
    if let Some(md) = mask_dir {
        for m in list_images(md)? {
            let stem = stem_of(&m);
            if masks.insert(stem.clone(), m).is_some() {
                return Err(Error::Dataset(format!("duplicate mask stem `{stem}`")));
            }
        }
        for stem in masks.keys() {
            if !seen.contains_key(stem) {
                warnings.push(format!("mask `{stem}` has no matching image"));
            }
        }
    }

    let frames: Vec<FrameEntry> = images
        .iter()
        .map(|p| {
            let id = stem_of(p);
            let mask_path = masks.get(&id).cloned();
            if mask_dir.is_some() && mask_path.is_none() {
                warnings.push(format!("frame `{id}` has no mask"));
            }
            FrameEntry {
                id,
                image_path: p.clone(),
                mask_path,
            }
        })
        .collect();

    let ids: Vec<String> = frames.iter().map(|f| f.id.clone()).collect();
    let split = split(&ids, DEFAULT_SPLIT_RATIO, DEFAULT_SPLIT_SEED)?;
    Ok(Ingested {
        manifest: DatasetManifest {
            version: MANIFEST_VERSION.to_string(),
            modality,
            frames,
            split,
            split_seed: DEFAULT_SPLIT_SEED,
            split_ratio: DEFAULT_SPLIT_RATIO,
            extra: BTreeMap::new(),
        },
        warnings,
    })
}

/// Number of training frames: `ceil(ratio · n)`, guarded against the
/// representation error of decimal ratios (e.g. `0.7 · 30`).
pub fn train_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded train/validation split. The ids are sorted, shuffled with
/// Fisher–Yates under [`SplitMix64`], and the first `ceil(ratio · n)` go to
/// training. Both halves are returned in sorted id order.
pub fn split(ids: &[String], ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    let mut shuffled = sorted.clone();
    SplitMix64::new(seed).shuffle(&mut shuffled);
    let n_train = train_count(sorted.len(), ratio);
    let mut train = shuffled[..n_train].to_vec();
    let mut val = shuffled[n_train..].to_vec();
    train.sort();
    val.sort();
    Ok(Split { train, val })
}

/// One frame's row in a selection manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub id: String,
    #[serde(flatten)]
    pub features: FeatureVector,
    #[serde(rename = "F")]
    pub score: f64,
    pub cluster: Option<usize>,
    pub distance: Option<f64>,
    pub is_representative: bool,
    pub rank: Option<usize>,
}

/// Scores (and, after selection, clusters and ranking) for every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub version: String,
    pub strategy: Option<Strategy>,
    pub reference_id: String,
    pub weights: WeightConfig,
    pub feature_params: FeatureParams,
    #[serde(default)]
    pub normalize_features: bool,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub frames: Vec<FrameRow>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SelectionManifest {
    pub fn representatives(&self) -> Vec<&FrameRow> {
        self.frames.iter().filter(|f| f.is_representative).collect()
    }

    /// Checks the representative/rank bookkeeping of a clustered manifest.
    pub fn validate(&self) -> Result<()> {
        let Some(k) = self.k else {
            return Ok(());
        };
        let reps = self.frames.iter().filter(|f| f.is_representative).count();
        if reps != k {
            return Err(Error::Schema(format!(
                "{reps} representatives flagged, expected {k}"
            )));
        }
        let mut ranks: Vec<usize> = self
            .frames
            .iter()
            .filter(|f| !f.is_representative)
            .map(|f| f.rank.unwrap_or(0))
            .collect();
        ranks.sort_unstable();
        if ranks != (1..=self.frames.len() - k).collect::<Vec<_>>() {
            return Err(Error::Schema(
                "ranks are not a permutation of 1..=N-k".into(),
            ));
        }
        Ok(())
    }

    /// `id,B,C,E,H,S,F,cluster,distance,rank`; unset fields are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,B,C,E,H,S,F,cluster,distance,rank\n");
        for f in &self.frames {
            let opt = |v: Option<String>| v.unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                f.id,
                f.features.brightness,
                f.features.contrast,
                f.features.edge_density,
                f.features.histogram,
                f.features.shape,
                f.score,
                opt(f.cluster.map(|c| c.to_string())),
                opt(f.distance.map(|d| d.to_string())),
                opt(f.rank.map(|r| r.to_string())),
            );
        }
        out
    }
}

/// Serializes a manifest as pretty UTF-8 JSON.
pub fn save_manifest<T: Serialize>(manifest: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a manifest, checking the version before the schema.
pub fn parse_manifest<T: DeserializeOwned>(text: &str) -> Result<T> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let version = match value.get("version") {
        Some(Value::String(v)) => v.clone(),
        Some(other) => other.to_string(),
        None => return Err(Error::Schema("missing field `version`".into())),
    };
    if version != MANIFEST_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MANIFEST_VERSION.into(),
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))
}

pub fn load_manifest<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i:02}")).collect()
    }

    #[test]
    fn seven_three_split() {
        let s = split(&ids(10), 0.7, 2024).unwrap();
        assert_eq!((s.train.len(), s.val.len()), (7, 3));
        assert_eq!(s, split(&ids(10), 0.7, 2024).unwrap());
        let mut all: Vec<String> = s.train.iter().chain(&s.val).cloned().collect();
        all.sort();
        assert_eq!(all, ids(10));
    }

    #[test]
    fn split_single_frame_goes_to_train() {
        let s = split(&ids(1), 0.7, 2024).unwrap();
        assert_eq!(s.train, ids(1));
        assert!(s.val.is_empty());
    }

    #[test]
    fn split_rejects_degenerate_ratio() {
        assert!(split(&ids(4), 0.0, 1).is_err());
        assert!(split(&ids(4), 1.0, 1).is_err());
    }

    #[test]
    fn split_ignores_input_order() {
        let mut rev = ids(12);
        rev.reverse();
        assert_eq!(
            split(&rev, 0.7, 9).unwrap(),
            split(&ids(12), 0.7, 9).unwrap()
        );
    }

    #[test]
    fn train_count_is_ceil() {
        assert_eq!(train_count(10, 0.7), 7);
        assert_eq!(train_count(30, 0.7), 21);
        assert_eq!(train_count(1, 0.7), 1);
        assert_eq!(train_count(3, 0.5), 2);
    }

    fn px(dir: &Path, name: &str) {
        Raster::gray(6, 6, vec![100; 36])
            .unwrap()
            .save_png(dir.join(name))
            .unwrap();
    }

    #[test]
    fn ingest_orders_and_pairs() {
        let d = tempfile::tempdir().unwrap();
        let m = tempfile::tempdir().unwrap();
        px(d.path(), "b.png");
        px(d.path(), "a.png");
        std::fs::write(d.path().join("notes.txt"), "x").unwrap();
        px(m.path(), "a.png");
        px(m.path(), "zz.png");
        let ing = ingest(d.path(), Some(m.path()), None).unwrap();
        assert_eq!(ing.manifest.ids(), vec!["a", "b"]);
        assert!(ing.manifest.frames[0].mask_path.is_some());
        assert!(ing.manifest.frames[1].mask_path.is_none());
        assert!(ing.warnings.iter().any(|w| w.contains("`b` has no mask")));
        assert!(ing.warnings.iter().any(|w| w.contains("`zz`")));
    }

    #[test]
    fn ingest_errors() {
        let d = tempfile::tempdir().unwrap();
        assert!(ingest(d.path(), None, None).is_err());
        px(d.path(), "a.png");
        Raster::gray(6, 6, vec![1; 36])
            .unwrap()
            .to_dynamic()
            .save_with_format(d.path().join("a.jpg"), image::ImageFormat::Jpeg)
            .unwrap();
        let err = ingest(d.path(), None, None).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn manifest_round_trip_keeps_unknown_fields() {
        let d = tempfile::tempdir().unwrap();
        px(d.path(), "a.png");
        px(d.path(), "b.png");
        let mut m = ingest(d.path(), None, Some("US".into())).unwrap().manifest;
        m.extra
            .insert("future".into(), serde_json::json!({"x": [1, 2]}));
        let p = d.path().join("m.json");
        save_manifest(&m, &p).unwrap();
        let back: DatasetManifest = load_manifest(&p).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn manifest_schema_errors() {
        let missing = r#"{"version": "1", "split": {"train": [], "val": []}, "split_seed": 1, "split_ratio": 0.7}"#;
        let err = parse_manifest::<DatasetManifest>(missing).unwrap_err();
        assert!(err.to_string().contains("frames"), "{err}");
        let future = r#"{"version": "999"}"#;
        assert!(matches!(
            parse_manifest::<DatasetManifest>(future),
            Err(Error::Version { .. })
        ));
        assert!(parse_manifest::<DatasetManifest>("{not json").is_err());
    }
}
