//! Cluster reconstruction for fixed ranking centroids.
//!
//! Two routes produce identical optima: exhaustive search compares every
//! distinct entry against every centroid, and the branch-and-bound tree fixes
//! ranking prefixes, brackets each centroid's distance to every member of a
//! node, and eliminates centroids whose lower bound cannot beat the best
//! upper bound by more than the slack `epsilon`. With `epsilon = 0` the tree
//! reproduces the exhaustive objective exactly; with `epsilon > 0` the
//! objective degrades by at most `n * (k - 1) * epsilon`.
//!
//! Entries are pre-sorted lexicographically once per call so that the members
//! of every node form a contiguous range, and the tree size depends only on
//! the distinct rankings present, not on their multiplicities.

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{KrcError, Result};
use crate::ranking::{CountedDataset, Ranking};

/// Dimension cutoff under which [`auto_assign`] prefers the tree.
pub const DEFAULT_BNB_THRESHOLD: usize = 5;

/// Which route an assignment call took.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssignMethod {
    Exhaustive,
    BranchAndBound,
}

/// Instrumentation for the benchmark harness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssignStats {
    pub method: AssignMethod,
    /// Child nodes created (the root is not counted).
    pub nodes_expanded: u64,
    /// Depth of the deepest node created.
    pub max_depth: usize,
    /// Centroids removed by the pruning rule, summed over all nodes.
    pub eliminations: u64,
}

impl AssignStats {
    fn exhaustive() -> Self {
        AssignStats {
            method: AssignMethod::Exhaustive,
            nodes_expanded: 0,
            max_depth: 0,
            eliminations: 0,
        }
    }
}

/// Distance bracket of one centroid over every ranking extending a prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CentroidBounds {
    pub lb: u64,
    pub ub: u64,
}

fn check_centroids(ds: &CountedDataset, centroids: &[Ranking]) -> Result<()> {
    if centroids.is_empty() {
        return Err(KrcError::NoCentroids);
    }
    for c in centroids {
        if c.dim() != ds.dim() {
            return Err(KrcError::DimensionMismatch {
                left: ds.dim(),
                right: c.dim(),
            });
        }
    }
    Ok(())
}

/// Labels every entry with the index of a nearest centroid, ties resolving to
/// the lowest centroid index. `O(distinct * m * k)`.
pub fn assign_es(ds: &CountedDataset, centroids: &[Ranking]) -> Result<Vec<usize>> {
    check_centroids(ds, centroids)?;
    let labels = ds
        .entries()
        .iter()
        .map(|e| {
            let x = e.ranking.values();
            let mut best = 0usize;
            let mut best_d = u64::MAX;
            for (i, c) in centroids.iter().enumerate() {
                let mut d = 0u64;
                for (&a, &b) in x.iter().zip(c.values()) {
                    let t = a as i64 - b as i64;
                    d += (t * t) as u64;
                }
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect();
    Ok(labels)
}

/// Suffix bracket of sorted centroid values `a` against the unused values `b`
/// (both ascending): the minimum pairs same-order, the maximum opposite-order.
#[inline]
fn suffix_bounds(a: &[u32], b: &[u32]) -> (u64, u64) {
    debug_assert_eq!(a.len(), b.len());
    let n = b.len();
    let mut lb = 0u64;
    let mut ub = 0u64;
    for i in 0..n {
        let d = a[i] as i64 - b[i] as i64;
        lb += (d * d) as u64;
        let d = a[i] as i64 - b[n - 1 - i] as i64;
        ub += (d * d) as u64;
    }
    (lb, ub)
}

/// Distance bracket for `centroid` over all rankings whose first coordinates
/// equal `prefix`.
///
/// The fixed part is exact; the free part brackets the centroid's sorted
/// suffix against the unused values in ascending (lower bound) and descending
/// (upper bound) order. With a full prefix both bounds collapse to the exact
/// squared distance.
pub fn node_bounds(prefix: &[u32], centroid: &Ranking) -> CentroidBounds {
    let m = centroid.dim();
    let depth = prefix.len();
    debug_assert!(depth <= m);
    let y = centroid.values();
    let mut fixed = 0u64;
    let mut used = vec![false; m];
    for (i, &v) in prefix.iter().enumerate() {
        debug_assert!((1..=m as u32).contains(&v) && !used[(v - 1) as usize]);
        used[(v - 1) as usize] = true;
        let d = y[i] as i64 - v as i64;
        fixed += (d * d) as u64;
    }
    let remaining: Vec<u32> = (1..=m as u32)
        .filter(|&v| !used[(v - 1) as usize])
        .collect();
    let mut suffix: Vec<u32> = y[depth..].to_vec();
    suffix.sort_unstable();
    let (lb, ub) = suffix_bounds(&suffix, &remaining);
    CentroidBounds {
        lb: fixed + lb,
        ub: fixed + ub,
    }
}

/// A tree node: a contiguous range of lexicographically sorted entries that
/// share a prefix, the values not yet fixed, and the surviving centroids with
/// their exact prefix distances.
struct BnbNode {
    depth: usize,
    lo: u32,
    hi: u32,
    remaining: SmallVec<[u32; 16]>,
    survivors: SmallVec<[(u32, u64); 16]>,
}

/// Branch-and-bound assignment with pruning slack `epsilon`.
pub fn assign_bnb(ds: &CountedDataset, centroids: &[Ranking], epsilon: f64) -> Result<Vec<usize>> {
    assign_bnb_with_stats(ds, centroids, epsilon).map(|(labels, _)| labels)
}

/// As [`assign_bnb`], also returning tree statistics.
pub fn assign_bnb_with_stats(
    ds: &CountedDataset,
    centroids: &[Ranking],
    epsilon: f64,
) -> Result<(Vec<usize>, AssignStats)> {
    check_centroids(ds, centroids)?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(KrcError::NegativeEpsilon(epsilon));
    }
    let mut stats = AssignStats {
        method: AssignMethod::BranchAndBound,
        nodes_expanded: 0,
        max_depth: 0,
        eliminations: 0,
    };
    let distinct = ds.distinct();
    let mut labels = vec![0usize; distinct];
    if centroids.len() == 1 {
        return Ok((labels, stats));
    }

    let m = ds.dim();
    let entries = ds.entries();
    let mut order: Vec<u32> = (0..distinct as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        entries[a as usize]
            .ranking
            .values()
            .cmp(entries[b as usize].ranking.values())
    });
    let coord =
        |pos: u32, d: usize| -> u32 { entries[order[pos as usize] as usize].ranking.values()[d] };

    // sorted_suffix[c][d] holds centroid c's coordinates d..m in ascending
    // order, so per-node bound work is a single merge against the remaining
    // values.
    let sorted_suffix: Vec<Vec<Vec<u32>>> = centroids
        .iter()
        .map(|c| {
            (0..=m)
                .map(|d| {
                    let mut s = c.values()[d..].to_vec();
                    s.sort_unstable();
                    s
                })
                .collect()
        })
        .collect();

    let root = BnbNode {
        depth: 0,
        lo: 0,
        hi: distinct as u32,
        remaining: (1..=m as u32).collect(),
        survivors: (0..centroids.len() as u32).map(|c| (c, 0u64)).collect(),
    };
    let mut stack = vec![root];
    // Scratch per child: (centroid, prefix distance, lb, ub, alive).
    let mut cand: Vec<(u32, u64, u64, u64, bool)> = Vec::with_capacity(centroids.len());

    while let Some(node) = stack.pop() {
        let d = node.depth;
        let mut start = node.lo;
        while start < node.hi {
            let j = coord(start, d);
            let mut end = start + 1;
            while end < node.hi && coord(end, d) == j {
                end += 1;
            }
            let child_depth = d + 1;
            stats.nodes_expanded += 1;
            if child_depth > stats.max_depth {
                stats.max_depth = child_depth;
            }
            let child_remaining: SmallVec<[u32; 16]> =
                node.remaining.iter().copied().filter(|&v| v != j).collect();

            cand.clear();
            for &(ci, pd) in &node.survivors {
                let y = centroids[ci as usize].values();
                let t = y[d] as i64 - j as i64;
                let pd = pd + (t * t) as u64;
                let (lb, ub) =
                    suffix_bounds(&sorted_suffix[ci as usize][child_depth], &child_remaining);
                cand.push((ci, pd, pd + lb, pd + ub, true));
            }

            // Eliminate in descending centroid order, recomputing the best
            // upper bound after every removal; the empty-minimum guard keeps
            // at least one centroid alive.
            let mut alive = cand.len();
            for pos in (0..cand.len()).rev() {
                if alive == 1 {
                    break;
                }
                let mut min_ub = f64::INFINITY;
                for (q, c) in cand.iter().enumerate() {
                    if q != pos && c.4 && (c.3 as f64) < min_ub {
                        min_ub = c.3 as f64;
                    }
                }
                if cand[pos].2 as f64 >= min_ub - epsilon {
                    cand[pos].4 = false;
                    alive -= 1;
                    stats.eliminations += 1;
                }
            }

            if alive == 1 {
                let ci = cand.iter().find(|c| c.4).expect("one survivor").0;
                for pos in start..end {
                    labels[order[pos as usize] as usize] = ci as usize;
                }
            } else if child_depth == m {
                // Full prefix: prefix distances are exact, so pick the
                // nearest survivor, ties to the lowest index.
                let mut best = (u64::MAX, 0u32);
                for c in cand.iter().filter(|c| c.4) {
                    if c.1 < best.0 {
                        best = (c.1, c.0);
                    }
                }
                for pos in start..end {
                    labels[order[pos as usize] as usize] = best.1 as usize;
                }
            } else {
                stack.push(BnbNode {
                    depth: child_depth,
                    lo: start,
                    hi: end,
                    remaining: child_remaining,
                    survivors: cand.iter().filter(|c| c.4).map(|c| (c.0, c.1)).collect(),
                });
            }
            start = end;
        }
    }
    Ok((labels, stats))
}

/// Dispatches to the tree when `m <= bnb_threshold`, otherwise to exhaustive
/// search.
pub fn auto_assign(
    ds: &CountedDataset,
    centroids: &[Ranking],
    epsilon: f64,
    bnb_threshold: usize,
) -> Result<Vec<usize>> {
    auto_assign_with_stats(ds, centroids, epsilon, bnb_threshold).map(|(labels, _)| labels)
}

/// As [`auto_assign`], also returning which route ran and its statistics.
pub fn auto_assign_with_stats(
    ds: &CountedDataset,
    centroids: &[Ranking],
    epsilon: f64,
    bnb_threshold: usize,
) -> Result<(Vec<usize>, AssignStats)> {
    if ds.dim() <= bnb_threshold {
        assign_bnb_with_stats(ds, centroids, epsilon)
    } else {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(KrcError::NegativeEpsilon(epsilon));
        }
        assign_es(ds, centroids).map(|labels| (labels, AssignStats::exhaustive()))
    }
}
