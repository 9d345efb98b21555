//! Point and box prompts derived from ground-truth masks, and the export
//! document handed to an external promptable segmentation runner.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Mask;
use crate::rng::SplitMix64;

/// Negatives are drawn at least this far (chessboard metric) from the mask.
pub const NEGATIVE_MARGIN: u32 = 5;

pub const EXPORT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub x: u32,
    pub y: u32,
    pub label: Label,
}

/// Inclusive pixel box, serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub xmin: u32,
    pub ymin: u32,
    pub xmax: u32,
    pub ymax: u32,
}

impl From<[u32; 4]> for BBox {
    fn from(v: [u32; 4]) -> Self {
        Self {
            xmin: v[0],
            ymin: v[1],
            xmax: v[2],
            ymax: v[3],
        }
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.xmin, b.ymin, b.xmax, b.ymax]
    }
}

impl BBox {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.xmin..=self.xmax).contains(&x) && (self.ymin..=self.ymax).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStrategy {
    #[default]
    StandardPos,
    RandomPos,
    SingleNeg,
    SinglePosNeg,
    FourPos,
    FourNeg,
    SinglePosTwoNeg,
    TwoPosFourNeg,
    #[serde(rename = "bbox")]
    BBox,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 9] = [
        PromptStrategy::StandardPos,
        PromptStrategy::RandomPos,
        PromptStrategy::SingleNeg,
        PromptStrategy::SinglePosNeg,
        PromptStrategy::FourPos,
        PromptStrategy::FourNeg,
        PromptStrategy::SinglePosTwoNeg,
        PromptStrategy::TwoPosFourNeg,
        PromptStrategy::BBox,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PromptStrategy::StandardPos => "standard-pos",
            PromptStrategy::RandomPos => "random-pos",
            PromptStrategy::SingleNeg => "single-neg",
            PromptStrategy::SinglePosNeg => "single-pos-neg",
            PromptStrategy::FourPos => "four-pos",
            PromptStrategy::FourNeg => "four-neg",
            PromptStrategy::SinglePosTwoNeg => "single-pos-two-neg",
            PromptStrategy::TwoPosFourNeg => "two-pos-four-neg",
            PromptStrategy::BBox => "bbox",
        }
    }

    /// `(positives, negatives)` a point strategy emits; `(0, 0)` for BBox.
    pub fn point_counts(&self) -> (usize, usize) {
        match self {
            PromptStrategy::StandardPos | PromptStrategy::RandomPos => (1, 0),
            PromptStrategy::SingleNeg => (0, 1),
            PromptStrategy::SinglePosNeg => (1, 1),
            PromptStrategy::FourPos => (4, 0),
            PromptStrategy::FourNeg => (0, 4),
            PromptStrategy::SinglePosTwoNeg => (1, 2),
            PromptStrategy::TwoPosFourNeg => (2, 4),
            PromptStrategy::BBox => (0, 0),
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptStrategy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown prompt strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub frame_id: String,
    pub strategy: PromptStrategy,
    pub points: Vec<Point>,
    pub bbox: Option<BBox>,
}

/// Tight inclusive box around every foreground pixel.
pub fn derive_bbox(mask: &Mask) -> Result<BBox> {
    let mut bbox: Option<BBox> = None;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if !mask.get(x, y) {
                continue;
            }
            bbox = Some(match bbox {
                None => BBox {
                    xmin: x,
                    ymin: y,
                    xmax: x,
                    ymax: y,
                },
                Some(b) => BBox {
                    xmin: b.xmin.min(x),
                    ymin: b.ymin.min(y),
                    xmax: b.xmax.max(x),
                    ymax: b.ymax.max(y),
                },
            });
        }
    }
    bbox.ok_or(Error::EmptyMask)
}

/// Pixels of the largest 8-connected foreground component, in raster order.
/// Equal sizes go to the component found first in raster order.
pub fn largest_component(mask: &Mask) -> Vec<(u32, u32)> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut label = vec![false; w * h];
    let mut best: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.data()[start] || label[start] {
            continue;
        }
        let mut comp = Vec::new();
        label[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if mask.data()[n] && !label[n] {
                        label[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best.into_iter()
        .map(|i| ((i % w) as u32, (i / w) as u32))
        .collect()
}

/// L1 distance from each pixel of `region` to the nearest pixel outside it,
/// with everything beyond the image border counted as outside.
fn l1_distance_transform(region: &[bool], w: usize, h: usize) -> Vec<u32> {
    let big = (w + h) as u32;
    let mut d: Vec<u32> = region.iter().map(|&r| if r { big } else { 0 }).collect();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if d[i] == 0 {
                continue;
            }
            let up = if y > 0 { d[i - w] } else { 0 };
            let left = if x > 0 { d[i - 1] } else { 0 };
            d[i] = d[i].min(up + 1).min(left + 1);
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            if d[i] == 0 {
                continue;
            }
            let down = if y + 1 < h { d[i + w] } else { 0 };
            let right = if x + 1 < w { d[i + 1] } else { 0 };
            d[i] = d[i].min(down + 1).min(right + 1);
        }
    }
    d
}

/// The most interior pixel of the largest component: the maximum of the L1
/// distance transform, lowest `(y, x)` on ties.
pub fn standard_pos(mask: &Mask) -> Result<(u32, u32)> {
    let comp = largest_component(mask);
    if comp.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut region = vec![false; w * h];
    for &(x, y) in &comp {
        region[y as usize * w + x as usize] = true;
    }
    let dist = l1_distance_transform(&region, w, h);
    // comp is in raster order, so the first maximum has the lowest (y, x).
    let mut best = comp[0];
    let mut best_d = 0;
    for &(x, y) in &comp {
        let d = dist[y as usize * w + x as usize];
        if d > best_d {
            best = (x, y);
            best_d = d;
        }
    }
    Ok(best)
}

/// Background pixels at chessboard distance `>= margin` from every
/// foreground pixel, in raster order.
fn far_background(mask: &Mask, margin: u32) -> Vec<(u32, u32)> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    // Chessboard dilation radius margin - 1 as two separable max passes.
    let r = margin.saturating_sub(1) as usize;
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = (lo..=hi).any(|xx| mask.data()[y * w + xx]);
        }
    }
    let mut out = Vec::new();
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let near = (lo..=hi).any(|yy| rows[yy * w + x]);
            if !near {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}

fn background(mask: &Mask) -> Vec<(u32, u32)> {
    let w = mask.width() as usize;
    mask.data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| !v)
        .map(|(i, _)| ((i % w) as u32, (i / w) as u32))
        .collect()
}

fn draw_negatives(mask: &Mask, n_neg: usize, rng: &mut SplitMix64) -> Result<Vec<Point>> {
    if n_neg == 0 {
        return Ok(Vec::new());
    }
    let far = far_background(mask, NEGATIVE_MARGIN);
    let pool = if far.len() >= n_neg {
        far
    } else {
        background(mask)
    };
    if pool.len() < n_neg {
        return Err(Error::InsufficientPixels {
            kind: "background",
            needed: n_neg,
            available: pool.len(),
        });
    }
    Ok(rng
        .sample(&pool, n_neg)
        .into_iter()
        .map(|(x, y)| Point {
            x,
            y,
            label: Label::Negative,
        })
        .collect())
}

/// Samples `n_pos` positives from the largest component and `n_neg`
/// negatives from background at least [`NEGATIVE_MARGIN`] away from the mask
/// (any background pixel when too few qualify). Positives come first.
pub fn sample_points(mask: &Mask, n_pos: usize, n_neg: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n_pos + n_neg);
    if n_pos > 0 {
        let comp = largest_component(mask);
        if comp.len() < n_pos {
            return Err(Error::InsufficientPixels {
                kind: "foreground",
                needed: n_pos,
                available: comp.len(),
            });
        }
        points.extend(rng.sample(&comp, n_pos).into_iter().map(|(x, y)| Point {
            x,
            y,
            label: Label::Positive,
        }));
    }
    points.extend(draw_negatives(mask, n_neg, &mut rng)?);
    Ok(points)
}

/// Builds the prompt for one frame under `strategy`.
pub fn derive_prompts(
    frame_id: &str,
    mask: &Mask,
    strategy: PromptStrategy,
    seed: u64,
) -> Result<PromptSpec> {
    let mut spec = PromptSpec {
        frame_id: frame_id.to_string(),
        strategy,
        points: Vec::new(),
        bbox: None,
    };
    match strategy {
        PromptStrategy::BBox => spec.bbox = Some(derive_bbox(mask)?),
        PromptStrategy::StandardPos | PromptStrategy::SinglePosNeg => {
            let (x, y) = standard_pos(mask)?;
            spec.points.push(Point {
                x,
                y,
                label: Label::Positive,
            });
            let (_, n_neg) = strategy.point_counts();
            let mut rng = SplitMix64::new(seed);
            spec.points.extend(draw_negatives(mask, n_neg, &mut rng)?);
        }
        _ => {
            let (n_pos, n_neg) = strategy.point_counts();
            spec.points = sample_points(mask, n_pos, n_neg, seed)?;
        }
    }
    Ok(spec)
}

/// Per-frame seed used by batch prompt derivation.
pub fn frame_seed(seed: u64, frame_index: usize) -> u64 {
    seed.wrapping_add(frame_index as u64)
}

/// One prompt in the export document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportPrompt {
    pub frame_id: String,
    pub points: Vec<Point>,
    pub bbox: Option<BBox>,
}

impl From<&PromptSpec> for ExportPrompt {
    fn from(p: &PromptSpec) -> Self {
        Self {
            frame_id: p.frame_id.clone(),
            points: p.points.clone(),
            bbox: p.bbox,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFrame {
    pub frame_id: String,
    pub reason: String,
}

/// Prompt export consumed by the external segmentation runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptExport {
    pub version: String,
    pub strategy: PromptStrategy,
    pub seed: u64,
    pub prompts: Vec<ExportPrompt>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedFrame>,
}
