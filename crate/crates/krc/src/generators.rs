//! Synthetic instance construction: uniform rankings, swap-walk clustered
//! datasets, and the tight family on which the ranking objective is exactly
//! twice the real-relaxation objective.
//!
//! All randomness flows through a seeded ChaCha8 stream with hand-rolled
//! Fisher-Yates shuffles, so identical seeds reproduce identical datasets
//! byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{KrcError, Result};
use crate::ranking::{sq_dist, CountedDataset, Ranking};

/// Parameters for a swap-walk clustered dataset.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SwapClusterSpec {
    /// Rows to generate.
    pub n: usize,
    /// Options per ranking.
    pub m: usize,
    /// Number of planted clusters.
    pub k: usize,
    /// Adjacent-value swaps per generated row. Walks of fewer than `m` swaps
    /// stay within squared distance `2 * omega^2` of their centroid.
    pub omega: u32,
    pub seed: u64,
}

/// Attempt cap for rejection-sampling separated centroids.
pub const CENTROID_RETRY_CAP: usize = 100_000;

fn fisher_yates(values: &mut [u32], rng: &mut ChaCha8Rng) {
    for i in (1..values.len()).rev() {
        let j = rng.random_range(0..=i);
        values.swap(i, j);
    }
}

fn uniform_ranking(m: usize, rng: &mut ChaCha8Rng) -> Ranking {
    let mut values: Vec<u32> = (1..=m as u32).collect();
    fisher_yates(&mut values, rng);
    Ranking::from_values_unchecked(values)
}

/// `n` i.i.d. uniform rankings in generation order.
pub fn gen_uniform_rows(n: usize, m: usize, seed: u64) -> Result<Vec<Ranking>> {
    if n == 0 {
        return Err(KrcError::EmptyDataset);
    }
    if m == 0 {
        return Err(KrcError::EmptyRanking);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| uniform_ranking(m, &mut rng)).collect())
}

/// A deduplicated dataset of `n` i.i.d. uniform rankings.
pub fn gen_uniform(n: usize, m: usize, seed: u64) -> Result<CountedDataset> {
    let rows = gen_uniform_rows(n, m, seed)?;
    CountedDataset::from_rows(rows.iter().map(|r| r.values()))
}

/// `k` pairwise-distinct uniform rankings, e.g. for benchmark centroids.
/// Fails when `k` exceeds the `m!` rankings that exist.
pub fn uniform_distinct_rankings(m: usize, k: usize, seed: u64) -> Result<Vec<Ranking>> {
    if m == 0 {
        return Err(KrcError::EmptyRanking);
    }
    let space: u128 = (1..=m.min(26) as u128).product();
    if k as u128 > space {
        return Err(KrcError::InfeasibleK {
            k,
            distinct: space.min(usize::MAX as u128) as usize,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Ranking> = Vec::with_capacity(k);
    while out.len() < k {
        let candidate = uniform_ranking(m, &mut rng);
        if !out.contains(&candidate) {
            out.push(candidate);
        }
    }
    Ok(out)
}

/// Swaps the positions of the values `ell` and `ell + 1` (not adjacent
/// positions).
pub fn swap_adjacent_values(ranking: &Ranking, ell: u32) -> Ranking {
    debug_assert!(ell >= 1 && (ell as usize) < ranking.dim());
    let mut values = ranking.values().to_vec();
    let a = values
        .iter()
        .position(|&v| v == ell)
        .expect("value present");
    let b = values
        .iter()
        .position(|&v| v == ell + 1)
        .expect("value present");
    values.swap(a, b);
    Ranking::from_values_unchecked(values)
}

fn swap_walk_with_rng(y: &Ranking, omega: u32, rng: &mut ChaCha8Rng) -> Ranking {
    let m = y.dim();
    let mut values = y.values().to_vec();
    // pos[v - 1] is the position of value v; kept in sync across swaps.
    let mut pos = vec![0usize; m];
    for (i, &v) in values.iter().enumerate() {
        pos[(v - 1) as usize] = i;
    }
    for _ in 0..omega {
        if m < 2 {
            break;
        }
        let ell = rng.random_range(1..m as u32);
        let a = pos[(ell - 1) as usize];
        let b = pos[ell as usize];
        values.swap(a, b);
        pos.swap((ell - 1) as usize, ell as usize);
    }
    Ranking::from_values_unchecked(values)
}

/// Applies `omega` random adjacent-value swaps to `y`.
///
/// For `omega < m` the result satisfies `sq_dist(x, y) <= 2 * omega^2`.
pub fn swap_walk(y: &Ranking, omega: u32, seed: u64) -> Ranking {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    swap_walk_with_rng(y, omega, &mut rng)
}

/// A generated clustered instance with its ground truth.
#[derive(Clone, Debug, Serialize)]
pub struct SwapClusteredInstance {
    pub dataset: CountedDataset,
    pub true_centroids: Vec<Ranking>,
    /// Rows in generation order (the dataset deduplicates them).
    pub rows: Vec<Ranking>,
    /// Planted centroid index of each row.
    pub row_labels: Vec<usize>,
}

/// Plants `k` centroids at pairwise squared distance above `2 * omega^2` by
/// rejection sampling, then draws each row from a uniformly chosen centroid's
/// swap walk. Cluster sizes are equal in expectation.
pub fn gen_swap_clustered(spec: &SwapClusterSpec) -> Result<SwapClusteredInstance> {
    if spec.n == 0 {
        return Err(KrcError::EmptyDataset);
    }
    if spec.m == 0 {
        return Err(KrcError::EmptyRanking);
    }
    if spec.k == 0 {
        return Err(KrcError::InfeasibleK {
            k: 0,
            distinct: spec.n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let separation = 2 * (spec.omega as u64).pow(2);

    let mut centroids: Vec<Ranking> = Vec::with_capacity(spec.k);
    let mut attempts = 0usize;
    while centroids.len() < spec.k {
        attempts += 1;
        if attempts > CENTROID_RETRY_CAP {
            return Err(KrcError::RetryCapExceeded {
                cap: CENTROID_RETRY_CAP,
            });
        }
        let candidate = uniform_ranking(spec.m, &mut rng);
        let separated = centroids
            .iter()
            .all(|c| sq_dist(c, &candidate).expect("same dimension") > separation);
        if separated {
            centroids.push(candidate);
        }
    }

    let mut rows = Vec::with_capacity(spec.n);
    let mut row_labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let cluster = rng.random_range(0..spec.k);
        rows.push(swap_walk_with_rng(
            &centroids[cluster],
            spec.omega,
            &mut rng,
        ));
        row_labels.push(cluster);
    }
    let dataset = CountedDataset::from_rows(rows.iter().map(|r| r.values()))?;
    Ok(SwapClusteredInstance {
        dataset,
        true_centroids: centroids,
        rows,
        row_labels,
    })
}

/// The tight instance family for a given `k`.
#[derive(Clone, Debug, Serialize)]
pub struct TightnessInstance {
    pub dataset: CountedDataset,
    pub m: usize,
    /// Exact ranking-clustering optimum: `2k`.
    pub expected_v_krc: u64,
    /// Exact real-relaxation optimum: `k`.
    pub expected_v_kmc: u64,
}

/// Builds `2k` rankings forming `k` pairs at squared distance 2 with all
/// cross-pair distances at least `4k`, so the optimal ranking objective is
/// exactly twice the optimal real objective.
pub fn gen_tightness(k: usize) -> Result<TightnessInstance> {
    if k == 0 {
        return Err(KrcError::InvalidConfig("k must be at least 1".into()));
    }
    // Smallest block width whose internal reversal moves a block at least
    // 4k away: (eta - 1) * eta * (eta + 1) / 3 >= 4k.
    let mut block = 1u64;
    while (block - 1) * block * (block + 1) / 3 < 4 * k as u64 {
        block += 1;
    }
    let block = block as i64;
    let k_i = k as i64;
    let m = (block * (k_i - 1) + 2 * k_i) as usize;
    let n = 2 * k;

    let theta = |i: i64| -> i64 {
        if i % 2 == 1 {
            (block + 2) * ((i - 1) / 2 - 1) + 2
        } else {
            (block + 2) * (i / 2 - 1)
        }
    };
    let lambda = |i: i64| -> i64 {
        if i % 2 == 1 {
            block
        } else {
            2
        }
    };

    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
    rows.push((1..=m as u32).collect());
    for i in 2..=n as i64 {
        let prev = rows.last().expect("previous row").clone();
        let th = theta(i);
        let la = lambda(i);
        let mut row = Vec::with_capacity(m);
        for j in 1..=m as i64 {
            let v = if j <= th {
                prev[(j - 1) as usize] as i64
            } else if j <= th + la {
                la + 2 * th - j + 1
            } else {
                j
            };
            row.push(v as u32);
        }
        rows.push(row);
    }

    let dataset = CountedDataset::from_rows(rows.iter().map(|r| r.as_slice()))?;
    Ok(TightnessInstance {
        dataset,
        m,
        expected_v_krc: 2 * k as u64,
        expected_v_kmc: k as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::validate_ranking;

    #[test]
    fn uniform_m1_is_constant() {
        let ds = gen_uniform(5, 1, 0).unwrap();
        assert_eq!(ds.distinct(), 1);
        assert_eq!(ds.entries()[0].ranking.values(), &[1]);
        assert_eq!(ds.total(), 5);
    }

    #[test]
    fn uniform_is_deterministic() {
        let a = gen_uniform(500, 5, 99).unwrap();
        let b = gen_uniform(500, 5, 99).unwrap();
        assert_eq!(a, b);
        let c = gen_uniform(500, 5, 100).unwrap();
        assert_ne!(a, c);
    }

    /// Chi-square over the 6 cells of m = 3 at n = 60000: statistic below
    /// the critical value 20.515 (five degrees of freedom, p > 0.001).
    #[test]
    fn uniform_chi_square_m3() {
        let ds = gen_uniform(60_000, 3, 2024).unwrap();
        assert_eq!(ds.distinct(), 6);
        let expected = 60_000.0 / 6.0;
        let stat: f64 = ds
            .entries()
            .iter()
            .map(|e| {
                let d = e.count as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(stat < 20.515, "chi-square statistic too large: {stat}");
    }

    /// Per-coordinate means stay within three standard errors of (m+1)/2.
    #[test]
    fn uniform_marginal_means() {
        let n = 40_000usize;
        let m = 6usize;
        let rows = gen_uniform_rows(n, m, 7).unwrap();
        let sigma = (((m * m - 1) as f64) / 12.0 / n as f64).sqrt();
        for j in 0..m {
            let mean: f64 = rows.iter().map(|r| r.values()[j] as f64).sum::<f64>() / n as f64;
            let center = (m as f64 + 1.0) / 2.0;
            assert!(
                (mean - center).abs() <= 3.0 * sigma,
                "coordinate {j} mean {mean} strays from {center}"
            );
        }
    }

    #[test]
    fn swap_walk_worked_example() {
        let y = validate_ranking(&[1, 2, 3, 4]).unwrap();
        let step1 = swap_adjacent_values(&y, 2);
        assert_eq!(step1.values(), &[1, 3, 2, 4]);
        let step2 = swap_adjacent_values(&step1, 1);
        assert_eq!(step2.values(), &[2, 3, 1, 4]);
        assert_eq!(sq_dist(&step2, &y).unwrap(), 6);
    }

    #[test]
    fn swap_walk_zero_is_identity() {
        let y = validate_ranking(&[3, 1, 4, 2]).unwrap();
        assert_eq!(swap_walk(&y, 0, 5), y);
    }

    /// Walks of omega < m stay within squared distance 2 * omega^2.
    #[test]
    fn swap_walk_distance_bound() {
        let y = swap_walk(&Ranking::identity(6), 6, 3);
        for seed in 0..2_000u64 {
            let x = swap_walk(&y, 3, seed);
            assert!(sq_dist(&x, &y).unwrap() <= 18);
        }
    }

    #[test]
    fn clustered_single_cluster_stays_close() {
        let spec = SwapClusterSpec {
            n: 200,
            m: 6,
            k: 1,
            omega: 2,
            seed: 11,
        };
        let inst = gen_swap_clustered(&spec).unwrap();
        let c = &inst.true_centroids[0];
        for row in &inst.rows {
            assert!(sq_dist(row, c).unwrap() <= 8);
        }
        assert_eq!(inst.rows.len(), 200);
        assert_eq!(inst.dataset.total(), 200);
    }

    #[test]
    fn clustered_centroids_separated() {
        let spec = SwapClusterSpec {
            n: 50,
            m: 6,
            k: 2,
            omega: 1,
            seed: 13,
        };
        let inst = gen_swap_clustered(&spec).unwrap();
        let d = sq_dist(&inst.true_centroids[0], &inst.true_centroids[1]).unwrap();
        assert!(d > 2);
    }

    #[test]
    fn clustered_impossible_separation_hits_retry_cap() {
        // At m = 2 the only two rankings are at squared distance 2, so no
        // pair can be farther than 2 * omega^2 = 8.
        let spec = SwapClusterSpec {
            n: 10,
            m: 2,
            k: 2,
            omega: 2,
            seed: 17,
        };
        assert!(matches!(
            gen_swap_clustered(&spec),
            Err(KrcError::RetryCapExceeded { .. })
        ));
    }

    #[test]
    fn tightness_k1() {
        let inst = gen_tightness(1).unwrap();
        assert_eq!(inst.m, 2);
        let values: Vec<&[u32]> = inst
            .dataset
            .entries()
            .iter()
            .map(|e| e.ranking.values())
            .collect();
        assert_eq!(values, vec![&[1, 2][..], &[2, 1][..]]);
        assert_eq!(inst.expected_v_krc, 2);
        assert_eq!(inst.expected_v_kmc, 1);
    }

    #[test]
    fn tightness_k2_lists_the_four_vectors() {
        let inst = gen_tightness(2).unwrap();
        assert_eq!(inst.m, 7);
        let values: Vec<&[u32]> = inst
            .dataset
            .entries()
            .iter()
            .map(|e| e.ranking.values())
            .collect();
        assert_eq!(
            values,
            vec![
                &[1, 2, 3, 4, 5, 6, 7][..],
                &[2, 1, 3, 4, 5, 6, 7][..],
                &[2, 1, 5, 4, 3, 6, 7][..],
                &[2, 1, 5, 4, 3, 7, 6][..],
            ]
        );
    }

    /// Concentrated clusters let the assignment tree prune far earlier than
    /// dispersed ones: compare expanded-node counts across walk lengths.
    #[test]
    fn concentrated_clusters_shrink_the_assignment_tree() {
        let nodes_for = |omega: u32| {
            let spec = SwapClusterSpec {
                n: 50_000,
                m: 6,
                k: 5,
                omega,
                seed: 21,
            };
            let inst = gen_swap_clustered(&spec).unwrap();
            let (_, stats) =
                crate::assign::assign_bnb_with_stats(&inst.dataset, &inst.true_centroids, 0.0)
                    .unwrap();
            stats.nodes_expanded
        };
        let concentrated = nodes_for(1);
        let dispersed = nodes_for(3);
        assert!(
            4 * concentrated <= dispersed,
            "expected a much smaller tree: {concentrated} vs {dispersed}"
        );
    }

    /// Consecutive odd/even pairs sit at distance 2; every other pair is at
    /// least 4k away.
    #[test]
    fn tightness_distance_pattern() {
        for k in 1..=6usize {
            let inst = gen_tightness(k).unwrap();
            let entries = inst.dataset.entries();
            assert_eq!(entries.len(), 2 * k);
            for i in 0..entries.len() {
                for j in (i + 1)..entries.len() {
                    let d = sq_dist(&entries[i].ranking, &entries[j].ranking).unwrap();
                    if i % 2 == 0 && j == i + 1 {
                        assert_eq!(d, 2, "pair ({i},{j}) in k={k}");
                    } else {
                        assert!(d >= 4 * k as u64, "pair ({i},{j}) in k={k}: {d}");
                    }
                }
            }
        }
    }
}
