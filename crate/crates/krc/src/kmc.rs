//! The k-means baseline: D²-weighted seeding, Lloyd iterations over rankings
//! treated as real points, and the snap step that converts the result into a
//! feasible ranking-vector clustering.
//!
//! The real-valued objective of a clustering lower-bounds the ranking-vector
//! objective of the same clustering, and snapping the mean centroids to
//! optimal rankings at most doubles it. The snapped solution is the
//! "baseline" that seeds the refinement loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::centroid::{optimal_centroid, rank_vector};
use crate::error::{KrcError, Result};
use crate::ranking::{CountedDataset, KrcSolution};

/// A real-valued point in option space.
pub type RealPoint = Vec<f64>;

/// Result of a Lloyd run: mean centroids, per-entry labels, and the
/// real-valued objective under those centroids.
#[derive(Clone, Debug, Serialize)]
pub struct KmcSolution {
    pub centroids: Vec<RealPoint>,
    pub labels: Vec<usize>,
    pub objective: f64,
}

/// Default Lloyd iteration cap.
pub const DEFAULT_MAX_ITER: usize = 5000;

fn real_sq_dist(x: &[u32], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(&a, &b)| {
            let d = a as f64 - b;
            d * d
        })
        .sum()
}

/// Draws `k` distinct seed points by D²-weighted sampling over the distinct
/// dataset entries, weighting by entry counts. Deterministic given the seed.
pub fn kmeanspp_seed(ds: &CountedDataset, k: usize, rng_seed: u64) -> Result<Vec<RealPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    kmeanspp_seed_with_rng(ds, k, &mut rng)
}

pub(crate) fn kmeanspp_seed_with_rng(
    ds: &CountedDataset,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RealPoint>> {
    if k == 0 || k > ds.distinct() {
        return Err(KrcError::InfeasibleK {
            k,
            distinct: ds.distinct(),
        });
    }
    let entries = ds.entries();
    let weighted_pick = |rng: &mut ChaCha8Rng, weights: &[f64]| -> usize {
        let total: f64 = weights.iter().sum();
        let draw = rng.random_range(0.0..total);
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if draw < acc {
                return i;
            }
        }
        // Guard against draw == total under accumulated rounding: take the
        // last positive-weight index.
        weights.iter().rposition(|&w| w > 0.0).unwrap()
    };

    let counts: Vec<f64> = entries.iter().map(|e| e.count as f64).collect();
    let first = weighted_pick(rng, &counts);
    let mut chosen = vec![first];
    let to_point = |i: usize| -> RealPoint {
        entries[i]
            .ranking
            .values()
            .iter()
            .map(|&v| v as f64)
            .collect()
    };
    let mut best_dist: Vec<f64> = entries
        .iter()
        .map(|e| real_sq_dist(e.ranking.values(), &to_point(first)))
        .collect();
    while chosen.len() < k {
        let weights: Vec<f64> = best_dist
            .iter()
            .zip(&counts)
            .map(|(&d, &c)| d * c)
            .collect();
        let next = weighted_pick(rng, &weights);
        let next_point = to_point(next);
        for (d, e) in best_dist.iter_mut().zip(entries) {
            let nd = real_sq_dist(e.ranking.values(), &next_point);
            if nd < *d {
                *d = nd;
            }
        }
        chosen.push(next);
    }
    Ok(chosen.into_iter().map(to_point).collect())
}

/// Nearest real centroid per entry, ties to the lowest centroid index.
fn assign_real(ds: &CountedDataset, centroids: &[RealPoint]) -> Vec<usize> {
    ds.entries()
        .iter()
        .map(|e| {
            let mut best = 0usize;
            let mut best_d = real_sq_dist(e.ranking.values(), &centroids[0]);
            for (i, c) in centroids.iter().enumerate().skip(1) {
                let d = real_sq_dist(e.ranking.values(), c);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Count-weighted mean of each cluster; exact because coordinate sums are
/// accumulated in integers before the single division.
pub fn cluster_means(ds: &CountedDataset, labels: &[usize], k: usize) -> Vec<RealPoint> {
    let m = ds.dim();
    let mut sums = vec![vec![0u64; m]; k];
    let mut totals = vec![0u64; k];
    for (entry, &label) in ds.entries().iter().zip(labels) {
        totals[label] += entry.count;
        for (s, &v) in sums[label].iter_mut().zip(entry.ranking.values()) {
            *s += entry.count * v as u64;
        }
    }
    sums.into_iter()
        .zip(&totals)
        .map(|(s, &t)| {
            if t == 0 {
                vec![f64::NAN; m]
            } else {
                s.into_iter().map(|v| v as f64 / t as f64).collect()
            }
        })
        .collect()
}

/// Real-valued objective of a labeling under mean centroids for the clusters.
pub fn kmc_objective_for_labels(ds: &CountedDataset, labels: &[usize], k: usize) -> f64 {
    let means = cluster_means(ds, labels, k);
    real_objective(ds, &means, labels)
}

fn real_objective(ds: &CountedDataset, centroids: &[RealPoint], labels: &[usize]) -> f64 {
    ds.entries()
        .iter()
        .zip(labels)
        .map(|(e, &l)| e.count as f64 * real_sq_dist(e.ranking.values(), &centroids[l]))
        .sum()
}

/// Relabels the count-weighted farthest entry into each empty cluster.
/// Donor clusters keep at least one entry. Returns whether anything moved.
fn repair_empty_real(ds: &CountedDataset, centroids: &[RealPoint], labels: &mut [usize]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut moved = false;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, entry) in ds.entries().iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d =
                entry.count as f64 * real_sq_dist(entry.ranking.values(), &centroids[labels[i]]);
            if pick.is_none_or(|(_, best)| d > best) {
                pick = Some((i, d));
            }
        }
        if let Some((i, _)) = pick {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] += 1;
            moved = true;
        }
    }
    moved
}

/// Lloyd iterations from a D²-weighted seeding.
///
/// The per-iteration objective (recorded after each mean update) is
/// non-increasing. Terminates at a label fixed point, when the objective
/// improves by less than 1e-12, or at `max_iter`.
pub fn lloyd(ds: &CountedDataset, k: usize, rng_seed: u64, max_iter: usize) -> Result<KmcSolution> {
    lloyd_with_history(ds, k, rng_seed, max_iter).map(|(s, _)| s)
}

/// As [`lloyd`], also returning the per-iteration objective sequence.
pub fn lloyd_with_history(
    ds: &CountedDataset,
    k: usize,
    rng_seed: u64,
    max_iter: usize,
) -> Result<(KmcSolution, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    lloyd_with_rng(ds, k, &mut rng, max_iter)
}

pub(crate) fn lloyd_with_rng(
    ds: &CountedDataset,
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iter: usize,
) -> Result<(KmcSolution, Vec<f64>)> {
    let mut centroids = kmeanspp_seed_with_rng(ds, k, rng)?;
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut prev_obj = f64::INFINITY;
    for _ in 0..max_iter {
        let mut new_labels = assign_real(ds, &centroids);
        let repaired = repair_empty_real(ds, &centroids, &mut new_labels);
        centroids = cluster_means(ds, &new_labels, k);
        let obj = real_objective(ds, &centroids, &new_labels);
        history.push(obj);
        let fixed = !repaired && new_labels == labels;
        labels = new_labels;
        let improvement = prev_obj - obj;
        prev_obj = obj;
        if fixed || improvement.abs() < 1e-12 {
            break;
        }
    }
    Ok((
        KmcSolution {
            centroids,
            labels,
            objective: prev_obj,
        },
        history,
    ))
}

/// Converts a Lloyd output into a feasible ranking-vector solution: the
/// clusters are kept and each cluster's centroid is replaced by its optimal
/// ranking, with the exact integer objective recomputed.
pub fn snap_to_krc(ds: &CountedDataset, kmc: &KmcSolution) -> Result<KrcSolution> {
    let k = kmc.centroids.len();
    for &l in &kmc.labels {
        if l >= k {
            return Err(KrcError::LabelOutOfRange { label: l, k });
        }
    }
    let mut centroids = Vec::with_capacity(k);
    let mut objective = 0u64;
    for cluster in 0..k {
        let members: Vec<_> = ds
            .entries()
            .iter()
            .zip(&kmc.labels)
            .filter(|(_, &l)| l == cluster)
            .map(|(e, _)| e.clone())
            .collect();
        if members.is_empty() {
            // Lloyd never leaves an empty cluster, but stay feasible if a
            // caller hands one in: rank the real centroid directly.
            centroids.push(rank_vector(&kmc.centroids[cluster]));
            continue;
        }
        let sub = CountedDataset::from_entries(members)?;
        let (centroid, obj) = optimal_centroid(&sub)?;
        centroids.push(centroid);
        objective += obj;
    }
    Ok(KrcSolution {
        centroids,
        labels: kmc.labels.clone(),
        objective,
    })
}

/// Rankings of the four-vector tight instance used in several tests: two
/// pairs at squared distance 2, all cross-pair distances much larger.
#[cfg(test)]
pub(crate) fn four_vector_instance() -> Vec<crate::ranking::Ranking> {
    [
        vec![1u32, 2, 3, 4, 5, 6, 7],
        vec![2, 1, 3, 4, 5, 6, 7],
        vec![2, 1, 5, 4, 3, 6, 7],
        vec![2, 1, 5, 4, 3, 7, 6],
    ]
    .into_iter()
    .map(|v| crate::ranking::Ranking::new(v).unwrap())
    .collect()
}
