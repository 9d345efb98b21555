//! Dice and IoU overlap metrics and directory-level evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{list_images, stem_of};
use crate::error::{Error, Result};
use crate::raster::{load_mask, Mask};

fn overlap(a: &Mask, b: &Mask) -> Result<(usize, usize, usize)> {
    a.same_dims(b)?;
    let mut inter = 0;
    let mut na = 0;
    let mut nb = 0;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x && y) as usize;
        na += x as usize;
        nb += y as usize;
    }
    Ok((inter, na, nb))
}

/// `2|a ∩ b| / (|a| + |b|)`; 1 when both masks are empty.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = overlap(a, b)?;
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// `|a ∩ b| / |a ∪ b|`; 1 when both masks are empty.
pub fn iou(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = overlap(a, b)?;
    let union = na + nb - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_id: String,
    pub dice: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: Vec<FrameScore>,
    pub mean_dice: f64,
    pub mean_iou: f64,
    pub frame_count: usize,
    /// Stems present on only one side of the pairing.
    pub skipped: Vec<String>,
}

impl EvalReport {
    pub fn from_scores(frames: Vec<FrameScore>, skipped: Vec<String>) -> Self {
        let n = frames.len();
        let (sd, si) = frames
            .iter()
            .fold((0.0, 0.0), |(d, i), f| (d + f.dice, i + f.iou));
        let (mean_dice, mean_iou) = if n == 0 {
            (0.0, 0.0)
        } else {
            (sd / n as f64, si / n as f64)
        };
        Self {
            frames,
            mean_dice,
            mean_iou,
            frame_count: n,
            skipped,
        }
    }

    /// `frame_id,dice,iou` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_id,dice,iou\n");
        for f in &self.frames {
            let _ = writeln!(out, "{},{},{}", f.frame_id, f.dice, f.iou);
        }
        out
    }
}

/// How predicted mask filenames map onto ground-truth stems.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairingRule {
    /// Stripped from the end of a prediction's stem before matching,
    /// e.g. `_pred` pairs `a_pred.png` with `a.png`.
    pub pred_suffix: Option<String>,
}

impl PairingRule {
    fn key(&self, stem: &str) -> String {
        match &self.pred_suffix {
            Some(sfx) => stem.strip_suffix(sfx.as_str()).unwrap_or(stem).to_string(),
            None => stem.to_string(),
        }
    }
}

/// Pairs predictions with ground truth by filename stem and scores each pair.
pub fn evaluate_run(pred_dir: &Path, gt_dir: &Path, rule: &PairingRule) -> Result<EvalReport> {
    let preds: BTreeMap<String, PathBuf> = list_images(pred_dir)?
        .into_iter()
        .map(|p| (rule.key(&stem_of(&p)), p))
        .collect();
    let gts: BTreeMap<String, PathBuf> = list_images(gt_dir)?
        .into_iter()
        .map(|p| (stem_of(&p), p))
        .collect();

    let pairs: Vec<(&String, &PathBuf, &PathBuf)> = preds
        .iter()
        .filter_map(|(k, p)| gts.get(k).map(|g| (k, p, g)))
        .collect();
    let mut skipped: Vec<String> = preds
        .keys()
        .filter(|k| !gts.contains_key(*k))
        .chain(gts.keys().filter(|k| !preds.contains_key(*k)))
        .cloned()
        .collect();
    skipped.sort();
    if pairs.is_empty() {
        return Err(Error::Dataset(format!(
            "no prediction in {} pairs with a mask in {}",
            pred_dir.display(),
            gt_dir.display()
        )));
    }

    let frames = pairs
        .par_iter()
        .map(|(id, p, g)| {
            let pred = load_mask(p)?;
            let gt = load_mask(g)?;
            Ok(FrameScore {
                frame_id: (*id).clone(),
                dice: dice(&pred, &gt)?,
                iou: iou(&pred, &gt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_scores(frames, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        let a = Mask::from_fn(6, 6, |x, _| x < 3).unwrap();
        let b = Mask::from_fn(6, 6, |x, _| x >= 3).unwrap();
        assert_eq!((dice(&a, &a).unwrap(), iou(&a, &a).unwrap()), (1.0, 1.0));
        assert_eq!((dice(&a, &b).unwrap(), iou(&a, &b).unwrap()), (0.0, 0.0));
    }

    #[test]
    fn subset_counts() {
        let a = Mask::from_fn(4, 4, |_, y| y < 2).unwrap();
        let b = Mask::from_fn(4, 4, |_, _| true).unwrap();
        assert_eq!(a.count(), 8);
        assert!((dice(&a, &b).unwrap() - 16.0 / 24.0).abs() < 1e-15);
        assert_eq!(iou(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn both_empty_is_perfect() {
        let e = Mask::empty(3, 3).unwrap();
        assert_eq!((dice(&e, &e).unwrap(), iou(&e, &e).unwrap()), (1.0, 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = Mask::empty(3, 3).unwrap();
        let b = Mask::empty(3, 4).unwrap();
        assert!(matches!(dice(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(iou(&a, &b).is_err());
    }

    fn write(dir: &Path, name: &str, m: &Mask) {
        m.save_png(dir.join(name)).unwrap();
    }

    #[test]
    fn directory_evaluation() {
        let pred = tempfile::tempdir().unwrap();
        let gt = tempfile::tempdir().unwrap();
        let left = Mask::from_fn(8, 8, |x, _| x < 4).unwrap();
        let right = Mask::from_fn(8, 8, |x, _| x >= 4).unwrap();
        write(gt.path(), "a.png", &left);
        write(gt.path(), "b.png", &left);
        write(gt.path(), "c.png", &left);
        write(pred.path(), "a.png", &left);
        write(pred.path(), "b.png", &right);

        let r = evaluate_run(pred.path(), gt.path(), &PairingRule::default()).unwrap();
        assert_eq!(r.frame_count, 2);
        assert_eq!((r.mean_dice, r.mean_iou), (0.5, 0.5));
        assert_eq!(r.skipped, vec!["c".to_string()]);
        assert!(r.to_csv().starts_with("frame_id,dice,iou\na,1,1\nb,0,0\n"));

        let same = evaluate_run(gt.path(), gt.path(), &PairingRule::default()).unwrap();
        assert_eq!((same.mean_dice, same.mean_iou), (1.0, 1.0));
    }

    #[test]
    fn suffix_pairing_and_empty_pairing() {
        let pred = tempfile::tempdir().unwrap();
        let gt = tempfile::tempdir().unwrap();
        let m = Mask::from_fn(5, 5, |x, y| x == y).unwrap();
        write(gt.path(), "x.png", &m);
        write(pred.path(), "x_pred.png", &m);
        assert!(evaluate_run(pred.path(), gt.path(), &PairingRule::default()).is_err());
        let rule = PairingRule {
            pred_suffix: Some("_pred".into()),
        };
        let r = evaluate_run(pred.path(), gt.path(), &rule).unwrap();
        assert_eq!(r.mean_dice, 1.0);
    }
}
