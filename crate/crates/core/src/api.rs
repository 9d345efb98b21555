//! Request and response bodies of the review service, shared with its client.

use serde::{Deserialize, Serialize};

use crate::prompts::{BBox, ExportPrompt, Label, Point, PromptStrategy};
use crate::selection::{Strategy, WeightConfig, DEFAULT_K};

/// Seed used when a request or command does not name one.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub id: String,
    pub index: usize,
    pub width: u32,
    pub height: u32,
    pub has_mask: bool,
    pub thumbnail_url: String,
    pub image_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRequest {
    pub frame_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectRequest {
    #[serde(default = "default_k")]
    pub k: i64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
    /// Falls back to the session weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightConfig>,
    /// Falls back to the session setting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_features: Option<bool>,
}

impl Default for SelectRequest {
    fn default() -> Self {
        Self {
            k: DEFAULT_K as i64,
            seed: DEFAULT_SEED,
            strategy: Strategy::default(),
            weights: None,
            normalize_features: None,
        }
    }
}

fn default_k() -> i64 {
    DEFAULT_K as i64
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// A clicked point; signed so that off-canvas clicks reach bounds checking
/// instead of failing to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPoint {
    pub x: i64,
    pub y: i64,
    pub label: Label,
}

/// Clinician-placed prompt for one frame. Replaces any derived prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRequest {
    pub frame_id: String,
    #[serde(default)]
    pub points: Vec<RawPoint>,
    #[serde(default)]
    pub bbox: Option<[i64; 4]>,
}

impl AnnotationRequest {
    /// Checks coordinates against a `width`×`height` frame and converts to
    /// an export prompt. Errors describe the first offending coordinate.
    pub fn validate(&self, width: u32, height: u32) -> Result<ExportPrompt, String> {
        if self.points.is_empty() && self.bbox.is_none() {
            return Err("annotation needs at least one point or a bbox".into());
        }
        let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < width as i64 && y < height as i64;
        let mut points = Vec::with_capacity(self.points.len());
        for p in &self.points {
            if !inside(p.x, p.y) {
                return Err(format!(
                    "point ({}, {}) outside {width}x{height} frame",
                    p.x, p.y
                ));
            }
            points.push(Point {
                x: p.x as u32,
                y: p.y as u32,
                label: p.label,
            });
        }
        let bbox = match self.bbox {
            None => None,
            Some([x0, y0, x1, y1]) => {
                if !inside(x0, y0) || !inside(x1, y1) {
                    return Err(format!(
                        "bbox [{x0}, {y0}, {x1}, {y1}] outside {width}x{height} frame"
                    ));
                }
                if x0 > x1 || y0 > y1 {
                    return Err(format!("bbox [{x0}, {y0}, {x1}, {y1}] has min above max"));
                }
                Some(BBox::from([x0 as u32, y0 as u32, x1 as u32, y1 as u32]))
            }
        };
        Ok(ExportPrompt {
            frame_id: self.frame_id.clone(),
            points,
            bbox,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub strategy: PromptStrategy,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for ExportQuery {
    fn default() -> Self {
        Self {
            strategy: PromptStrategy::default(),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
    pub running: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Status {
    pub session_id: String,
    pub ready: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub frame_count: usize,
    pub reference_id: Option<String>,
    pub scoring: Progress,
    pub has_selection: bool,
    pub annotations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(points: Vec<(i64, i64)>, bbox: Option<[i64; 4]>) -> AnnotationRequest {
        AnnotationRequest {
            frame_id: "f".into(),
            points: points
                .into_iter()
                .map(|(x, y)| RawPoint {
                    x,
                    y,
                    label: Label::Positive,
                })
                .collect(),
            bbox,
        }
    }

    #[test]
    fn annotation_bounds() {
        assert!(req(vec![(-1, 0)], None).validate(10, 10).is_err());
        assert!(req(vec![(10, 0)], None).validate(10, 10).is_err());
        assert!(req(vec![(9, 9)], None).validate(10, 10).is_ok());
        assert!(req(vec![], None).validate(10, 10).is_err());
        assert!(req(vec![], Some([5, 5, 4, 6])).validate(10, 10).is_err());
        let ok = req(vec![], Some([1, 2, 3, 4])).validate(10, 10).unwrap();
        assert_eq!(ok.bbox, Some(BBox::from([1, 2, 3, 4])));
    }

    #[test]
    fn select_defaults() {
        let r: SelectRequest = serde_json::from_str("{}").unwrap();
        assert_eq!(r, SelectRequest::default());
        let q: ExportQuery = serde_json::from_str("{}").unwrap();
        assert_eq!(q.seed, DEFAULT_SEED);
    }
}
