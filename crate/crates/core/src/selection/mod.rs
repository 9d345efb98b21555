//! Composite scoring, clustering and prompt-frame selection.

pub mod kmeans;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng::SplitMix64;

pub use kmeans::ClusterModel;

/// Default number of prompt frames.
pub const DEFAULT_K: usize = 5;

/// Weights of `B, C, E, H, S` in the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps_weight: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self::from_array([0.2; 5])
    }
}

impl WeightConfig {
    pub fn from_array(w: [f64; 5]) -> Self {
        Self {
            alpha: w[0],
            beta: w[1],
            gamma: w[2],
            delta: w[3],
            eps_weight: w[4],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.eps_weight,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite: {w:?}"
            )));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter(
                "at least one weight must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

impl FromStr for WeightConfig {
    type Err = Error;

    /// Parses `a,b,c,d,e`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::InvalidParameter(format!(
                "expected 5 comma-separated weights, got {}",
                parts.len()
            )));
        }
        let mut w = [0.0; 5];
        for (slot, p) in w.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid weight `{p}`")))?;
        }
        let cfg = Self::from_array(w);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `F = α·B + β·C + γ·E + δ·H + ε_w·S`.
pub fn composite_score(fv: &FeatureVector, w: &WeightConfig) -> f64 {
    w.alpha * fv.brightness
        + w.beta * fv.contrast
        + w.gamma * fv.edge_density
        + w.delta * fv.histogram
        + w.eps_weight * fv.shape
}

/// Per-feature min-max rescaling to `[0, 1]` across the dataset. A feature
/// that is constant over the dataset maps to 0.
pub fn normalize_features(features: &[FeatureVector]) -> Vec<FeatureVector> {
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for fv in features {
        for (j, v) in fv.as_array().into_iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    features
        .iter()
        .map(|fv| {
            let mut out = fv.as_array();
            for j in 0..5 {
                let range = hi[j] - lo[j];
                out[j] = if range > 0.0 {
                    (out[j] - lo[j]) / range
                } else {
                    0.0
                };
            }
            FeatureVector::from_array(out)
        })
        .collect()
}

/// Composite scores of a dataset, keyed by frame id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub frame_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub reference_id: String,
}

impl ScoreSet {
    pub fn new(frame_ids: Vec<String>, scores: Vec<f64>, reference_id: String) -> Result<Self> {
        if frame_ids.len() != scores.len() {
            return Err(Error::InvalidParameter(format!(
                "{} ids but {} scores",
                frame_ids.len(),
                scores.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = frame_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Dataset(format!("duplicate frame id `{dup}`")));
        }
        if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite score {bad}")));
        }
        if !frame_ids.contains(&reference_id) {
            return Err(Error::UnknownFrame(reference_id));
        }
        Ok(Self {
            frame_ids,
            scores,
            reference_id,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn kmeans_fit(scores: &ScoreSet, k: usize, seed: u64) -> Result<ClusterModel> {
    kmeans::fit(&scores.scores, k, seed)
}

/// Representatives and proximity ranking, by frame index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// One frame per cluster, in cluster order.
    pub representatives: Vec<usize>,
    /// Non-representative frames, nearest to their centroid first.
    pub ranking: Vec<usize>,
    /// `|F_i − μ(assignment(i))|` per frame.
    pub distances: Vec<f64>,
}

/// Distances closer than `TIE_RESOLUTION` of the score range compare equal,
/// so ties that are exact in real arithmetic (e.g. the two members of a
/// two-frame cluster) resolve by frame index rather than by rounding noise.
pub const TIE_RESOLUTION: f64 = 1.0 / (1u64 << 32) as f64;

/// Integer ordering keys for distances, quantized to [`TIE_RESOLUTION`] of
/// the score range.
pub fn distance_keys(distances: &[f64], scores: &[f64]) -> Vec<u64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    distances
        .iter()
        .map(|&d| {
            if range > 0.0 {
                (d / range / TIE_RESOLUTION).round() as u64
            } else {
                0
            }
        })
        .collect()
}

/// Picks the frame nearest each centroid (lowest index on ties) and ranks
/// all other frames by ascending centroid distance (lowest index on ties).
pub fn select_representatives(model: &ClusterModel, scores: &[f64]) -> SelectionResult {
    let distances: Vec<f64> = (0..scores.len())
        .map(|i| model.distance(scores, i))
        .collect();
    let keys = distance_keys(&distances, scores);
    let mut best: Vec<Option<usize>> = vec![None; model.k];
    for (i, &c) in model.assignment.iter().enumerate() {
        match best[c] {
            Some(b) if keys[b] <= keys[i] => {}
            _ => best[c] = Some(i),
        }
    }
    let representatives: Vec<usize> = best
        .into_iter()
        .map(|b| b.expect("fitted clusters are non-empty"))
        .collect();
    let ranking = rank_remaining(&keys, &representatives);
    SelectionResult {
        representatives,
        ranking,
        distances,
    }
}

fn rank_remaining(keys: &[u64], chosen: &[usize]) -> Vec<usize> {
    let mut rest: Vec<usize> = (0..keys.len()).filter(|i| !chosen.contains(i)).collect();
    rest.sort_by_key(|&i| (keys[i], i));
    rest
}

/// Selection result for an externally chosen frame subset, with distances
/// and ranking measured under `model`.
pub fn selection_for_subset(
    model: &ClusterModel,
    scores: &[f64],
    chosen: Vec<usize>,
) -> SelectionResult {
    let distances: Vec<f64> = (0..scores.len())
        .map(|i| model.distance(scores, i))
        .collect();
    let ranking = rank_remaining(&distance_keys(&distances, scores), &chosen);
    SelectionResult {
        representatives: chosen,
        ranking,
        distances,
    }
}

fn check_count(n: usize, r: usize) -> Result<()> {
    if r < 1 || r > n {
        return Err(Error::InvalidParameter(format!(
            "selection size {r} outside 1..={n}"
        )));
    }
    Ok(())
}

/// `r` distinct frame indices from a seeded shuffle, returned ascending.
pub fn select_random(n: usize, r: usize, seed: u64) -> Result<Vec<usize>> {
    check_count(n, r)?;
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let mut out = idx[..r].to_vec();
    out.sort_unstable();
    Ok(out)
}

/// Evenly spaced indices `round(j (n − 1) / (r − 1))`, halves rounded up.
pub fn select_uniform(n: usize, r: usize) -> Result<Vec<usize>> {
    check_count(n, r)?;
    if r == 1 {
        return Ok(vec![0]);
    }
    let mut out: Vec<usize> = Vec::with_capacity(r);
    for j in 0..r {
        let num = 2 * j * (n - 1) + (r - 1);
        let idx = num / (2 * (r - 1));
        if !out.contains(&idx) {
            out.push(idx);
        }
    }
    let mut fill = 0;
    while out.len() < r {
        if !out.contains(&fill) {
            out.push(fill);
        }
        fill += 1;
    }
    out.sort_unstable();
    Ok(out)
}

/// Scores used by the unweighted ablation: the plain mean of `B, C, E, H`
/// and `S` min-max rescaled over the dataset.
pub fn unweighted_scores(features: &[FeatureVector]) -> Vec<f64> {
    let lo = features
        .iter()
        .map(|f| f.shape)
        .fold(f64::INFINITY, f64::min);
    let hi = features
        .iter()
        .map(|f| f.shape)
        .fold(f64::NEG_INFINITY, f64::max);
    features
        .iter()
        .map(|f| {
            let s = if hi > lo {
                (f.shape - lo) / (hi - lo)
            } else {
                0.0
            };
            (f.brightness + f.contrast + f.edge_density + f.histogram + s) / 5.0
        })
        .collect()
}

/// Selection strategies compared by the harness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Afse,
    Random,
    Uniform,
    AfseWoScorer,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::Uniform,
        Strategy::AfseWoScorer,
        Strategy::Afse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Afse => "afse",
            Strategy::Random => "random",
            Strategy::Uniform => "uniform",
            Strategy::AfseWoScorer => "afse-wo-scorer",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy `{s}`")))
    }
}

/// Output of a selection run over precomputed features.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRun {
    pub strategy: Strategy,
    /// The per-frame score the clusters were fitted on.
    pub scores: Vec<f64>,
    pub model: ClusterModel,
    pub selection: SelectionResult,
}

/// Runs one selection strategy. Every strategy fits a cluster model so that
/// distances and the proximity ranking are reported uniformly; random and
/// uniform strategies measure their picks under the composite-score model.
pub fn run_strategy(
    strategy: Strategy,
    features: &[FeatureVector],
    weights: &WeightConfig,
    normalize: bool,
    k: usize,
    seed: u64,
) -> Result<SelectionRun> {
    weights.validate()?;
    check_count(features.len(), k)?;
    let scores = match strategy {
        Strategy::AfseWoScorer => unweighted_scores(features),
        _ => {
            let fv = if normalize {
                normalize_features(features)
            } else {
                features.to_vec()
            };
            fv.iter().map(|f| composite_score(f, weights)).collect()
        }
    };
    let model = kmeans::fit(&scores, k, seed)?;
    let selection = match strategy {
        Strategy::Afse | Strategy::AfseWoScorer => select_representatives(&model, &scores),
        Strategy::Random => {
            selection_for_subset(&model, &scores, select_random(scores.len(), k, seed)?)
        }
        Strategy::Uniform => {
            selection_for_subset(&model, &scores, select_uniform(scores.len(), k)?)
        }
    };
    Ok(SelectionRun {
        strategy,
        scores,
        model,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_for(scores: &[f64], k: usize) -> ClusterModel {
        kmeans::fit(scores, k, 2024).unwrap()
    }

    #[test]
    fn composite_examples() {
        let w = WeightConfig::default();
        let ones = FeatureVector::from_array([1.0; 5]);
        assert!((composite_score(&ones, &w) - 1.0).abs() < 1e-15);

        let fv = FeatureVector::from_array([0.5, 0.25, 0.0, 1.0, 23.0259]);
        // 0.2 · (0.5 + 0.25 + 0 + 1 + 23.0259)
        assert!((composite_score(&fv, &w) - 4.95518).abs() < 1e-12);

        let only_b = WeightConfig::from_array([1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(composite_score(&fv, &only_b), 0.5);
    }

    #[test]
    fn weights_parse_and_validate() {
        let w: WeightConfig = "1, 0,0,0,0".parse().unwrap();
        assert_eq!(w.as_array(), [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!("0,0,0,0,0".parse::<WeightConfig>().is_err());
        assert!("1,2".parse::<WeightConfig>().is_err());
        assert!("1,x,0,0,0".parse::<WeightConfig>().is_err());
        assert!(WeightConfig::from_array([f64::NAN, 1.0, 0.0, 0.0, 0.0])
            .validate()
            .is_err());
    }

    #[test]
    fn symmetric_tie_takes_lowest_index() {
        let s = [0.0, 1.0, 10.0, 11.0];
        let m = model_for(&s, 2);
        assert_eq!(m.centroids, vec![0.5, 10.5]);
        let sel = select_representatives(&m, &s);
        assert_eq!(sel.representatives, vec![0, 2]);
        assert_eq!(sel.ranking, vec![1, 3]);
    }

    #[test]
    fn three_point_tie() {
        let s = [0.0, 0.4, 10.0];
        let m = model_for(&s, 2);
        let sel = select_representatives(&m, &s);
        assert_eq!(sel.representatives, vec![0, 2]);
        assert_eq!(sel.distances[0], sel.distances[1]);
    }

    #[test]
    fn k_equals_n_everyone_represents() {
        let s = [3.0, 1.0, 2.0];
        let sel = select_representatives(&model_for(&s, 3), &s);
        let mut reps = sel.representatives.clone();
        reps.sort();
        assert_eq!(reps, vec![0, 1, 2]);
        assert!(sel.ranking.is_empty());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(select_uniform(10, 5).unwrap(), vec![0, 2, 5, 7, 9]);
        assert_eq!(select_uniform(5, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(select_uniform(7, 1).unwrap(), vec![0]);
        assert!(select_uniform(3, 4).is_err());
        assert!(select_uniform(3, 0).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let a = select_random(50, 5, 2024).unwrap();
        assert_eq!(a, select_random(50, 5, 2024).unwrap());
        assert_eq!(a.len(), 5);
        let mut d = a.clone();
        d.dedup();
        assert_eq!(d.len(), 5);
        assert!(select_random(5, 6, 1).is_err());
    }

    #[test]
    fn wo_scorer_degenerate_and_single() {
        let same = vec![FeatureVector::from_array([0.3, 0.1, 0.0, 1.0, 23.0]); 4];
        let s = unweighted_scores(&same);
        assert!(s.iter().all(|&v| v == s[0]));
        let run = run_strategy(
            Strategy::AfseWoScorer,
            &same,
            &WeightConfig::default(),
            false,
            1,
            3,
        )
        .unwrap();
        assert_eq!(run.selection.representatives, vec![0]);
        assert!(run.selection.distances.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn normalization_maps_to_unit_range() {
        let f = vec![
            FeatureVector::from_array([0.1, 0.5, 0.0, 1.0, 3.0]),
            FeatureVector::from_array([0.3, 0.5, 0.2, 0.0, 23.0]),
        ];
        let n = normalize_features(&f);
        assert_eq!(n[0].as_array(), [0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(n[1].as_array(), [1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("best".parse::<Strategy>().is_err());
    }

    #[test]
    fn score_set_validation() {
        assert!(ScoreSet::new(vec!["a".into()], vec![1.0], "b".into()).is_err());
        assert!(ScoreSet::new(vec!["a".into(), "a".into()], vec![1.0, 2.0], "a".into()).is_err());
        assert!(ScoreSet::new(vec!["a".into()], vec![1.0, 2.0], "a".into()).is_err());
        assert!(ScoreSet::new(vec!["a".into()], vec![1.0], "a".into()).is_ok());
    }
}
