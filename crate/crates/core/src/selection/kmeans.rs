//! One-dimensional k-means over composite scores.
//!
//! Seeding is k-means++ driven by [`SplitMix64`]; refinement is Lloyd's
//! algorithm. Because Lloyd can stall in a local optimum, the converged
//! partition is compared against the exact optimum of the 1-D problem
//! (where optimal clusters are contiguous runs of the sorted scores) and
//! replaced when strictly worse. That final step only ever lowers the
//! objective, so the recorded history stays non-increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const MAX_ITERATIONS: usize = 100;
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster centroids, ascending.
    pub centroids: Vec<f64>,
    /// Cluster index per input score.
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    /// Objective after each Lloyd iteration (and the exact polish, if taken).
    pub history: Vec<f64>,
}

impl ClusterModel {
    pub fn distance(&self, scores: &[f64], i: usize) -> f64 {
        (scores[i] - self.centroids[self.assignment[i]]).abs()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Fits `k` clusters to `scores`; deterministic for a given `(scores, k, seed)`.
pub fn fit(scores: &[f64], k: usize, seed: u64) -> Result<ClusterModel> {
    let n = scores.len();
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the number of frames ({n})"
        )));
    }
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {bad}")));
    }

    let mut rng = SplitMix64::new(seed);
    let mut centroids = plus_plus_seeds(scores, k, &mut rng);
    let mut assignment = vec![usize::MAX; n];
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<usize> = scores.iter().map(|&x| nearest(&centroids, x)).collect();
        repair_empty(scores, &mut next, &mut centroids);
        let changed = next != assignment;
        assignment = next;
        centroids = means(scores, &assignment, k);
        let objective = sse(scores, &assignment, &centroids);

        let converged = match history.last() {
            Some(&prev) => {
                !changed || prev == 0.0 || (prev - objective).abs() / prev < RELATIVE_TOLERANCE
            }
            None => !changed,
        };
        history.push(objective);
        if converged {
            break;
        }
    }

    let lloyd = canonical_objective(scores, &assignment, k);
    let exact = optimal_partition(scores, k);
    let exact_objective = canonical_objective(scores, &exact, k);
    if exact_objective < lloyd - 1e-12 * lloyd.max(1.0) {
        assignment = exact;
        history.push(exact_objective);
    }

    Ok(canonicalize(scores, assignment, k, history))
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &mu) in centroids.iter().enumerate() {
        let d = (x - mu).abs();
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn plus_plus_seeds(scores: &[f64], k: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let n = scores.len();
    let first = rng.below(n as u64) as usize;
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = scores
        .iter()
        .map(|&x| (x - scores[first]).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Every remaining point coincides with a chosen seed.
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(pick);
        for (i, &x) in scores.iter().enumerate() {
            d2[i] = d2[i].min((x - scores[pick]).powi(2));
        }
    }
    chosen.into_iter().map(|i| scores[i]).collect()
}

/// Moves the point farthest from its centroid (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty(scores: &[f64], assignment: &mut [usize], centroids: &mut [f64]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &x) in scores.iter().enumerate() {
            let c = assignment[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = (x - centroids[c]).abs();
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("k <= n guarantees a donor cluster");
        assignment[i] = empty;
        centroids[empty] = scores[i];
    }
}

fn means(scores: &[f64], assignment: &[usize], k: usize) -> Vec<f64> {
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (&x, &c) in scores.iter().zip(assignment) {
        sum[c] += x;
        count[c] += 1;
    }
    sum.iter().zip(&count).map(|(s, &n)| s / n as f64).collect()
}

fn sse(scores: &[f64], assignment: &[usize], centroids: &[f64]) -> f64 {
    scores
        .iter()
        .zip(assignment)
        .map(|(&x, &c)| (x - centroids[c]).powi(2))
        .sum()
}

/// Members of each cluster sorted ascending by value.
fn sorted_members(scores: &[f64], assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); k];
    for (&x, &c) in scores.iter().zip(assignment) {
        groups[c].push(x);
    }
    for g in &mut groups {
        g.sort_by(f64::total_cmp);
    }
    groups
}

fn sorted_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Objective with a fixed summation order: values ascending within each
/// cluster, clusters ascending by centroid. Two equal partitions therefore
/// produce bit-identical objectives regardless of how they were labelled.
pub(crate) fn canonical_objective(scores: &[f64], assignment: &[usize], k: usize) -> f64 {
    let mut groups: Vec<(f64, f64)> = sorted_members(scores, assignment, k)
        .into_iter()
        .map(|g| {
            let mu = sorted_mean(&g);
            (mu, g.iter().map(|x| (x - mu).powi(2)).sum::<f64>())
        })
        .collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups.iter().map(|g| g.1).sum()
}

fn canonicalize(
    scores: &[f64],
    assignment: Vec<usize>,
    k: usize,
    history: Vec<f64>,
) -> ClusterModel {
    let groups = sorted_members(scores, &assignment, k);
    let mut order: Vec<(f64, usize, usize)> = (0..k)
        .map(|c| {
            let first = assignment
                .iter()
                .position(|&a| a == c)
                .unwrap_or(usize::MAX);
            (sorted_mean(&groups[c]), first, c)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut relabel = vec![0; k];
    for (new, &(_, _, old)) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let assignment: Vec<usize> = assignment.iter().map(|&c| relabel[c]).collect();
    let centroids = order.iter().map(|o| o.0).collect();
    let objective = canonical_objective(scores, &assignment, k);
    ClusterModel {
        k,
        centroids,
        assignment,
        objective,
        history,
    }
}

/// Globally optimal 1-D partition into `k` contiguous runs of the sorted
/// scores, by dynamic programming with divide-and-conquer row minimization
/// (`O(k n log n)`). Returns cluster labels in input order.
pub(crate) fn optimal_partition(scores: &[f64], k: usize) -> Vec<usize> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let v: Vec<f64> = order.iter().map(|&i| scores[i]).collect();

    // Prefix sums shifted by the median for better conditioning.
    let shift = v[n / 2];
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for i in 0..n {
        let x = v[i] - shift;
        s1[i + 1] = s1[i] + x;
        s2[i + 1] = s2[i] + x * x;
    }
    let cost = |i: usize, j: usize| -> f64 {
        // segment v[i..=j]
        let len = (j + 1 - i) as f64;
        let a = s1[j + 1] - s1[i];
        let b = s2[j + 1] - s2[i];
        (b - a * a / len).max(0.0)
    };

    let mut prev: Vec<f64> = (0..n).map(|j| cost(0, j)).collect();
    // starts[m][j]: first sorted index of cluster m when clusters 0..=m cover v[..=j]
    let mut starts: Vec<Vec<usize>> = vec![vec![0; n]];
    for m in 1..k {
        let mut cur = vec![f64::INFINITY; n];
        let mut arg = vec![0usize; n];
        solve_layer(&prev, &cost, m, n - 1, m, n - 1, &mut cur, &mut arg);
        prev = cur;
        starts.push(arg);
    }

    let mut labels_sorted = vec![0usize; n];
    let mut end = n - 1;
    for m in (0..k).rev() {
        let start = starts[m][end];
        for slot in labels_sorted.iter_mut().take(end + 1).skip(start) {
            *slot = m;
        }
        if m > 0 {
            end = start - 1;
        }
    }
    let mut labels = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = labels_sorted[pos];
    }
    labels
}

#[allow(clippy::too_many_arguments)]
fn solve_layer(
    prev: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
    cur: &mut [f64],
    arg: &mut [usize],
) {
    if lo > hi {
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = opt_lo;
    for i in opt_lo..=opt_hi.min(mid) {
        let c = prev[i - 1] + cost(i, mid);
        if c < best {
            best = c;
            best_i = i;
        }
    }
    cur[mid] = best;
    arg[mid] = best_i;
    if mid > lo {
        solve_layer(prev, cost, lo, mid - 1, opt_lo, best_i, cur, arg);
    }
    solve_layer(prev, cost, mid + 1, hi, best_i, opt_hi, cur, arg);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_mean() {
        let s = [1.0, 2.0, 6.0];
        let m = fit(&s, 1, 5).unwrap();
        assert_eq!(m.centroids, vec![3.0]);
        assert_eq!(m.assignment, vec![0, 0, 0]);
        assert_eq!(m.objective, 4.0 + 1.0 + 9.0);
    }

    #[test]
    fn separable_pairs() {
        let m = fit(&[0.0, 0.0, 10.0, 10.0], 2, 2024).unwrap();
        assert_eq!(m.centroids, vec![0.0, 10.0]);
        assert_eq!(m.objective, 0.0);
        assert_eq!(m.assignment, vec![0, 0, 1, 1]);
    }

    #[test]
    fn k_out_of_range() {
        assert!(fit(&[1.0, 2.0], 3, 0).is_err());
        assert!(fit(&[1.0, 2.0], 0, 0).is_err());
        assert!(fit(&[1.0, f64::NAN], 1, 0).is_err());
    }

    #[test]
    fn identical_scores_with_many_clusters() {
        let m = fit(&[4.0; 6], 3, 11).unwrap();
        assert!(m.cluster_sizes().iter().all(|&s| s > 0));
        assert_eq!(m.objective, 0.0);
    }

    #[test]
    fn k_equals_n() {
        let s = [3.0, -1.0, 8.0, 2.5];
        let m = fit(&s, 4, 9).unwrap();
        assert_eq!(m.cluster_sizes(), vec![1, 1, 1, 1]);
        assert_eq!(m.objective, 0.0);
        assert_eq!(m.centroids, vec![-1.0, 2.5, 3.0, 8.0]);
    }

    #[test]
    fn exact_partition_matches_split_scan() {
        let s = [0.1, 5.0, 0.3, 9.0, 4.7, 9.4, 0.0];
        let labels = optimal_partition(&s, 2);
        let obj = canonical_objective(&s, &labels, 2);
        let mut sorted = s.to_vec();
        sorted.sort_by(f64::total_cmp);
        let best = (1..sorted.len())
            .map(|cut| {
                let sse = |g: &[f64]| {
                    let m = g.iter().sum::<f64>() / g.len() as f64;
                    g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                };
                sse(&sorted[..cut]) + sse(&sorted[cut..])
            })
            .fold(f64::INFINITY, f64::min);
        assert!((obj - best).abs() < 1e-12);
    }

    #[test]
    fn history_is_non_increasing() {
        let s: Vec<f64> = (0..200).map(|i| ((i * 7919) % 113) as f64 / 7.0).collect();
        for seed in 0..20 {
            let m = fit(&s, 5, seed).unwrap();
            for w in m.history.windows(2) {
                assert!(w[1] <= w[0], "{:?}", m.history);
            }
        }
    }
}
