//! Row-labeling comparators for the reconstruction benchmark.
//!
//! The benchmark task is to label every row of a raw dataset with its
//! nearest centroid. Two routes do this:
//!
//! - the scan route compares each row against every centroid, costing
//!   `O(n * m * k)`;
//! - the tree route deduplicates rows, runs the branch-and-bound assignment
//!   over the distinct rankings, and expands entry labels back to rows, so
//!   its per-row cost is a cheap dedup lookup while the tree work depends
//!   only on the distinct rankings present.
//!
//! The scan wins when `m` is large (many distinct rankings, deep trees); the
//! tree wins when `m` is small and rows heavily repeat. [`crossover_sweep`]
//! measures both across dimensions.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::assign::assign_bnb;
use crate::error::Result;
use crate::generators::{gen_uniform_rows, uniform_distinct_rankings};
use crate::ranking::{CountedDataset, DatasetEntry, Ranking};

/// Nearest-centroid label per row by direct scanning, ties to the lowest
/// centroid index.
pub fn label_rows_scan(rows: &[Ranking], centroids: &[Ranking]) -> Vec<usize> {
    rows.iter()
        .map(|row| {
            let x = row.values();
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
        .collect()
}

/// Position of a permutation in lexicographic order, used as a perfect
/// dedup key for small dimensions.
fn lehmer_rank(values: &[u32]) -> usize {
    let m = values.len();
    let mut rank = 0usize;
    let mut fact = 1usize;
    for i in (0..m).rev() {
        let smaller_after = values[i + 1..].iter().filter(|&&v| v < values[i]).count();
        rank += smaller_after * fact;
        fact *= m - i;
    }
    rank
}

fn factorial(m: usize) -> usize {
    (1..=m).product()
}

/// Nearest-centroid label per row through deduplication, the
/// branch-and-bound tree over distinct rankings, and expansion back to rows.
pub fn label_rows_tree(
    rows: &[Ranking],
    centroids: &[Ranking],
    epsilon: f64,
) -> Result<Vec<usize>> {
    let m = rows.first().map_or(0, Ranking::dim);
    let mut entries: Vec<DatasetEntry> = Vec::new();
    let mut row_entry: Vec<u32> = Vec::with_capacity(rows.len());

    if m > 0 && m <= 8 {
        // Perfect dedup table over all m! permutations.
        let mut table = vec![u32::MAX; factorial(m)];
        for row in rows {
            let slot = &mut table[lehmer_rank(row.values())];
            if *slot == u32::MAX {
                *slot = entries.len() as u32;
                entries.push(DatasetEntry {
                    ranking: row.clone(),
                    count: 1,
                });
            } else {
                entries[*slot as usize].count += 1;
            }
            row_entry.push(*slot);
        }
    } else {
        let mut index: HashMap<&[u32], u32> = HashMap::new();
        for row in rows {
            let next = entries.len() as u32;
            let slot = *index.entry(row.values()).or_insert(next);
            if slot == next {
                entries.push(DatasetEntry {
                    ranking: row.clone(),
                    count: 1,
                });
            } else {
                entries[slot as usize].count += 1;
            }
            row_entry.push(slot);
        }
    }

    let ds = CountedDataset::from_entries(entries)?;
    let labels = assign_bnb(&ds, centroids, epsilon)?;
    Ok(row_entry.into_iter().map(|e| labels[e as usize]).collect())
}

/// One measured dimension of the crossover sweep.
#[derive(Clone, Debug, Serialize)]
pub struct CrossoverPoint {
    pub m: usize,
    pub n: usize,
    pub distinct: usize,
    pub k: usize,
    /// Fastest scan-route time over the repetitions, seconds.
    pub scan_seconds: f64,
    /// Fastest tree-route time over the repetitions, seconds.
    pub tree_seconds: f64,
}

impl CrossoverPoint {
    /// Tree time over scan time; below 1 the tree wins.
    pub fn ratio(&self) -> f64 {
        self.tree_seconds / self.scan_seconds
    }
}

/// Times both routes on uniform data for each dimension in `m_list`.
pub fn crossover_sweep(
    n: usize,
    k: usize,
    m_list: &[usize],
    seed: u64,
    reps: usize,
) -> Result<Vec<CrossoverPoint>> {
    let mut out = Vec::with_capacity(m_list.len());
    for (i, &m) in m_list.iter().enumerate() {
        let rows = gen_uniform_rows(n, m, seed.wrapping_add(i as u64))?;
        let centroids = uniform_distinct_rankings(m, k, seed.wrapping_add(1000 + i as u64))?;
        let distinct = {
            let mut uniq: Vec<&[u32]> = rows.iter().map(Ranking::values).collect();
            uniq.sort_unstable();
            uniq.dedup();
            uniq.len()
        };

        let mut scan_seconds = f64::INFINITY;
        let mut tree_seconds = f64::INFINITY;
        for _ in 0..reps.max(1) {
            let t = Instant::now();
            std::hint::black_box(label_rows_scan(&rows, &centroids));
            scan_seconds = scan_seconds.min(t.elapsed().as_secs_f64());

            let t = Instant::now();
            std::hint::black_box(label_rows_tree(&rows, &centroids, 0.0)?);
            tree_seconds = tree_seconds.min(t.elapsed().as_secs_f64());
        }
        out.push(CrossoverPoint {
            m,
            n,
            distinct,
            k,
            scan_seconds,
            tree_seconds,
        });
    }
    Ok(out)
}
