//! Adaptive frame selection for interactive segmentation of 2D image sequences.
//!
//! Frames are scored against a clinician-chosen reference frame using five
//! unsupervised features (brightness, contrast, edge density, HSV histogram
//! correlation and Hu-moment shape similarity). The weighted composite scores
//! are clustered with 1-D k-means, and the frame nearest each centroid becomes
//! a prompt frame. Remaining frames are ranked by their distance to their
//! centroid.
//!
//! Around that engine the crate provides prompt derivation from masks
//! (points and boxes for an external promptable segmentation model), Dice/IoU
//! evaluation, dataset ingestion with a reproducible split, and the JSON/CSV
//! artifacts shared by the CLI and the review service.

pub mod api;
pub mod dataset;
pub mod error;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod raster;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use features::{FeatureParams, FeatureVector, HuMoments, ReferenceProfile};
pub use raster::{EdgeMap, Mask, Raster};
pub use rng::SplitMix64;
pub use selection::{ClusterModel, ScoreSet, SelectionResult, Strategy, WeightConfig};
