//! Optimal centroid of a single cluster.
//!
//! The closed form ranks the count-weighted per-coordinate means: coordinate
//! `j` of the centroid is the 1-based rank of mean `j` in ascending order,
//! ties broken by lower coordinate index. This runs in `O(n·m + m log m)` and
//! is certified against an exhaustive search over all `m!` candidates.

use crate::error::{KrcError, Result};
use crate::ranking::{sq_dist_unchecked, CountedDataset, Ranking};

/// Per-option average rank of a cluster, computed from integer coordinate
/// sums so the values are platform-independent.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMeans {
    means: Vec<f64>,
}

impl ColumnMeans {
    /// Average rank per option; each value lies in `[1, m]` and the values
    /// sum to `m(m+1)/2`.
    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

/// Count-weighted per-coordinate means of a cluster.
///
/// Coordinate sums are accumulated in integers, so the resulting ratios are
/// exact and platform-independent.
pub fn column_means(cluster: &CountedDataset) -> Result<ColumnMeans> {
    if cluster.total() == 0 {
        return Err(KrcError::EmptyCluster);
    }
    let m = cluster.dim();
    let mut sums = vec![0u64; m];
    for entry in cluster.entries() {
        for (s, &v) in sums.iter_mut().zip(entry.ranking.values()) {
            *s += entry.count * v as u64;
        }
    }
    let n = cluster.total() as f64;
    Ok(ColumnMeans {
        means: sums.into_iter().map(|s| s as f64 / n).collect(),
    })
}

/// Ranks arbitrary real values ascending: coordinate `j` of the result is the
/// 1-based rank of `values[j]`, ties broken by lower coordinate index first.
pub fn rank_vector(values: &[f64]) -> Ranking {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    // Stable by construction: equal values keep ascending coordinate order.
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0u32; m];
    for (rank, &coord) in order.iter().enumerate() {
        ranks[coord] = rank as u32 + 1;
    }
    Ranking::from_values_unchecked(ranks)
}

/// The ranking whose coordinate `j` is the rank of mean `j` in ascending order.
pub fn rank_of_means(means: &ColumnMeans) -> Ranking {
    rank_vector(&means.means)
}

/// Optimal centroid of a non-empty cluster and the exact cluster objective.
pub fn optimal_centroid(cluster: &CountedDataset) -> Result<(Ranking, u64)> {
    let centroid = rank_of_means(&column_means(cluster)?);
    let objective = cluster_objective(cluster, &centroid);
    Ok((centroid, objective))
}

/// Count-weighted sum of squared distances from every entry to `centroid`.
pub fn cluster_objective(cluster: &CountedDataset, centroid: &Ranking) -> u64 {
    cluster
        .entries()
        .iter()
        .map(|e| e.count * sq_dist_unchecked(e.ranking.values(), centroid.values()))
        .sum()
}

/// Default dimension cap for [`brute_force_centroid`].
pub const BRUTE_FORCE_DEFAULT_CAP: usize = 8;

/// Independent oracle: exhaustive minimum over all `m!` candidate centroids.
///
/// Candidates are visited in lexicographic order and ties keep the first
/// (lexicographically smallest) minimizer, so the result is deterministic.
/// Refuses to run for `m > cap`.
pub fn brute_force_centroid(cluster: &CountedDataset, cap: usize) -> Result<(Ranking, u64)> {
    let m = cluster.dim();
    if cluster.total() == 0 {
        return Err(KrcError::EmptyCluster);
    }
    if m > cap {
        return Err(KrcError::BruteForceCapExceeded { m, cap });
    }
    let mut candidate: Vec<u32> = (1..=m as u32).collect();
    let mut best: Option<(Vec<u32>, u64)> = None;
    loop {
        let obj: u64 = cluster
            .entries()
            .iter()
            .map(|e| e.count * sq_dist_unchecked(e.ranking.values(), &candidate))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((candidate.clone(), obj));
        }
        if !next_permutation(&mut candidate) {
            break;
        }
    }
    let (values, obj) = best.expect("at least one candidate");
    Ok((Ranking::from_values_unchecked(values), obj))
}

/// Advances to the next permutation in lexicographic order; false at the last.
pub(crate) fn next_permutation(vals: &mut [u32]) -> bool {
    let n = vals.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && vals[i - 1] >= vals[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while vals[j] <= vals[i - 1] {
        j -= 1;
    }
    vals.swap(i - 1, j);
    vals[i..].reverse();
    true
}
