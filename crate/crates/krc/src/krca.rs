//! The refinement loop: start from the snapped k-means baseline, then
//! alternate optimal centroid updates with nearest-centroid reconstruction
//! until the objective stops improving.
//!
//! With zero pruning slack both half-steps are individually optimal, so the
//! objective sequence is a non-increasing sequence of even integers and the
//! loop terminates after at most `baseline/2` improving iterations. With
//! positive slack the loop keeps the best solution seen and stops after three
//! consecutive non-improving iterations.

use std::time::Instant;

use rand::SeedableRng;
use serde::Serialize;

use crate::assign::auto_assign;
use crate::centroid::optimal_centroid;
use crate::error::{KrcError, Result};
use crate::kmc::{lloyd_with_rng, snap_to_krc};
use crate::ranking::{objective, CountedDataset, KrcSolution, Ranking};

/// Controls for one refinement run.
#[derive(Clone, Debug, Serialize)]
pub struct KrcaConfig {
    /// Number of clusters.
    pub k: usize,
    /// Branch-and-bound pruning slack.
    pub epsilon: f64,
    /// Dimension cutoff for using the tree during reconstruction.
    pub bnb_threshold: usize,
    /// Stop once the objective improves by less than this.
    pub tol: f64,
    /// Hard cap on refinement iterations.
    pub max_outer_iter: usize,
    /// Seed for the k-means baseline.
    pub seed: u64,
}

impl KrcaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KrcaConfig {
            k,
            epsilon: 1e-6,
            bnb_threshold: crate::assign::DEFAULT_BNB_THRESHOLD,
            tol: 1e-6,
            max_outer_iter: 1000,
            seed,
        }
    }
}

/// Outcome of a refinement run.
#[derive(Clone, Debug, Serialize)]
pub struct KrcaReport {
    /// The snapped k-means solution the loop started from.
    pub baseline: KrcSolution,
    /// Best solution seen.
    #[serde(rename = "final")]
    pub final_solution: KrcSolution,
    /// Refinement iterations executed.
    pub iterations: usize,
    /// Objective after the baseline (index 0) and after each iteration.
    pub per_iteration_objectives: Vec<u64>,
    /// Percentage improvement of the final objective over the baseline.
    pub relative_improvement_pct: f64,
    /// Wall-clock seconds for the whole run, baseline included.
    pub wall_time: f64,
}

/// Percentage objective reduction of `v_final` relative to itself:
/// `(v_baseline - v_final) / v_final * 100`.
///
/// A final objective of zero with a positive baseline reports infinity;
/// two zeros report zero.
pub fn relative_improvement(v_baseline: u64, v_final: u64) -> f64 {
    if v_final == 0 {
        if v_baseline == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (v_baseline as f64 - v_final as f64) / v_final as f64 * 100.0
    }
}

/// Moves one entry into every empty cluster: the entry farthest from its
/// current centroid, among entries whose donor cluster keeps at least one
/// entry; distance ties resolve to the lowest entry index.
///
/// Returns the `(cluster, entry)` pairs that were repaired.
pub fn empty_cluster_repair(
    ds: &CountedDataset,
    centroids: &[Ranking],
    labels: &mut [usize],
) -> Vec<(usize, usize)> {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut repairs = Vec::new();
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut pick: Option<(usize, u64)> = None;
        for (i, entry) in ds.entries().iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = crate::ranking::sq_dist(&entry.ranking, &centroids[labels[i]])
                .expect("labels reference same-dimension centroids");
            if pick.is_none_or(|(_, best)| d > best) {
                pick = Some((i, d));
            }
        }
        if let Some((i, _)) = pick {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] += 1;
            repairs.push((empty, i));
        }
    }
    repairs
}

/// Runs the full approximation: k-means baseline, snap, then refinement.
pub fn krca(ds: &CountedDataset, cfg: &KrcaConfig) -> Result<KrcaReport> {
    if cfg.k == 0 || cfg.k > ds.distinct() {
        return Err(KrcError::InfeasibleK {
            k: cfg.k,
            distinct: ds.distinct(),
        });
    }
    if cfg.epsilon.is_nan() || cfg.epsilon < 0.0 {
        return Err(KrcError::NegativeEpsilon(cfg.epsilon));
    }
    if cfg.tol.is_nan() || cfg.tol < 0.0 {
        return Err(KrcError::InvalidConfig(format!(
            "tol must be non-negative, got {}",
            cfg.tol
        )));
    }
    let start = Instant::now();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let (kmc, _) = lloyd_with_rng(ds, cfg.k, &mut rng, crate::kmc::DEFAULT_MAX_ITER)?;
    let baseline = snap_to_krc(ds, &kmc)?;

    let mut centroids = baseline.centroids.clone();
    let mut labels = baseline.labels.clone();
    let mut best = baseline.clone();
    let mut objectives = vec![baseline.objective];
    let mut iterations = 0usize;
    let mut non_improving = 0usize;

    while iterations < cfg.max_outer_iter {
        iterations += 1;

        // Optimal centroid per non-empty cluster.
        for cluster in 0..cfg.k {
            let members: Vec<_> = ds
                .entries()
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == cluster)
                .map(|(e, _)| e.clone())
                .collect();
            if members.is_empty() {
                continue;
            }
            let sub = CountedDataset::from_entries(members)?;
            centroids[cluster] = optimal_centroid(&sub)?.0;
        }

        let mut new_labels = auto_assign(ds, &centroids, cfg.epsilon, cfg.bnb_threshold)?;
        // Reseed the centroid of a repaired cluster onto the moved entry so
        // the recorded objective never increases through a repair.
        for (cluster, entry) in empty_cluster_repair(ds, &centroids, &mut new_labels) {
            centroids[cluster] = ds.entries()[entry].ranking.clone();
        }
        let fixed_point = new_labels == labels;
        labels = new_labels;

        let obj = objective(ds, &centroids, &labels)?;
        let prev = *objectives.last().expect("baseline recorded");
        objectives.push(obj);
        if obj < best.objective {
            best = KrcSolution {
                centroids: centroids.clone(),
                labels: labels.clone(),
                objective: obj,
            };
        }

        // The iteration map is deterministic in the labels, so an unchanged
        // labeling can never change again.
        if fixed_point {
            break;
        }
        let improvement = prev as f64 - obj as f64;
        if cfg.epsilon == 0.0 {
            if improvement < cfg.tol {
                break;
            }
        } else {
            if improvement < cfg.tol {
                non_improving += 1;
                if non_improving >= 3 {
                    break;
                }
            } else {
                non_improving = 0;
            }
        }
    }

    let relative_improvement_pct = relative_improvement(baseline.objective, best.objective);
    Ok(KrcaReport {
        baseline,
        final_solution: best,
        iterations,
        per_iteration_objectives: objectives,
        relative_improvement_pct,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmc::kmc_objective_for_labels;
    use crate::ranking::{build_dataset, validate_ranking};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tight_pair_single_cluster() {
        let ds = build_dataset(&[vec![1, 2], vec![2, 1]]).unwrap();
        let report = krca(&ds, &KrcaConfig::new(1, 0)).unwrap();
        assert_eq!(report.final_solution.objective, 2);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn four_vector_instance_reaches_optimum() {
        let rows = vec![
            vec![1, 2, 3, 4, 5, 6, 7],
            vec![2, 1, 3, 4, 5, 6, 7],
            vec![2, 1, 5, 4, 3, 6, 7],
            vec![2, 1, 5, 4, 3, 7, 6],
        ];
        let ds = build_dataset(&rows).unwrap();
        let report = krca(&ds, &KrcaConfig::new(2, 1)).unwrap();
        assert_eq!(report.final_solution.objective, 4);
        // The baseline already separates the two tight pairs, so the loop
        // has nothing left to improve.
        assert_eq!(report.relative_improvement_pct, 0.0);
    }

    #[test]
    fn k_equals_distinct_reaches_zero() {
        let rows = vec![vec![1, 2, 3], vec![2, 1, 3], vec![3, 1, 2]];
        let ds = build_dataset(&rows).unwrap();
        let report = krca(&ds, &KrcaConfig::new(3, 5)).unwrap();
        assert_eq!(report.final_solution.objective, 0);
    }

    #[test]
    fn infeasible_k_rejected() {
        let ds = build_dataset(&[vec![1, 2]]).unwrap();
        assert!(matches!(
            krca(&ds, &KrcaConfig::new(2, 0)),
            Err(KrcError::InfeasibleK { .. })
        ));
    }

    #[test]
    fn relative_improvement_examples() {
        assert_eq!(relative_improvement(110, 100), 10.0);
        assert_eq!(relative_improvement(100, 100), 0.0);
        assert_eq!(relative_improvement(0, 0), 0.0);
        assert_eq!(relative_improvement(10, 0), f64::INFINITY);
    }

    #[test]
    fn repair_moves_farthest_entry() {
        let ds = build_dataset(&[vec![1, 2, 3], vec![2, 1, 3], vec![3, 2, 1]]).unwrap();
        let centroids = vec![
            validate_ranking(&[1, 2, 3]).unwrap(),
            validate_ranking(&[3, 2, 1]).unwrap(),
        ];
        let mut labels = vec![0, 0, 0];
        let repairs = empty_cluster_repair(&ds, &centroids, &mut labels);
        // [3,2,1] is farthest from centroid 0, so it moves to cluster 1.
        assert_eq!(repairs, vec![(1, 2)]);
        assert_eq!(labels, vec![0, 0, 1]);
    }

    #[test]
    fn repair_is_a_no_op_without_empty_clusters() {
        let ds = build_dataset(&[vec![1, 2], vec![2, 1]]).unwrap();
        let centroids = vec![
            validate_ranking(&[1, 2]).unwrap(),
            validate_ranking(&[2, 1]).unwrap(),
        ];
        let mut labels = vec![0, 1];
        assert!(empty_cluster_repair(&ds, &centroids, &mut labels).is_empty());
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn repair_with_duplicate_centroids_keeps_all_clusters_inhabited() {
        let ds = build_dataset(&[vec![1, 2, 3], vec![1, 3, 2], vec![2, 1, 3]]).unwrap();
        let y = validate_ranking(&[1, 2, 3]).unwrap();
        let centroids = vec![y.clone(), y];
        // Duplicate centroids tie every entry to index 0.
        let mut labels = crate::assign::assign_es(&ds, &centroids).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
        empty_cluster_repair(&ds, &centroids, &mut labels);
        for cluster in 0..2 {
            assert!(labels.contains(&cluster));
        }
    }

    fn random_dataset(rng: &mut ChaCha8Rng, m: usize, rows: usize) -> CountedDataset {
        let data: Vec<Vec<u32>> = (0..rows)
            .map(|_| {
                let mut v: Vec<u32> = (1..=m as u32).collect();
                v.shuffle(rng);
                v
            })
            .collect();
        build_dataset(&data).unwrap()
    }

    /// Zero-slack runs: non-increasing objective sequence, non-negative
    /// improvement, and the inherited two-factor bound against the baseline
    /// clustering's real objective.
    #[test]
    fn zero_slack_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..25 {
            let ds = random_dataset(&mut rng, 4, 40);
            let mut cfg = KrcaConfig::new(3, trial);
            cfg.epsilon = 0.0;
            let report = krca(&ds, &cfg).unwrap();
            for w in report.per_iteration_objectives.windows(2) {
                assert!(w[1] <= w[0], "objective increased: {:?}", w);
            }
            assert!(report.relative_improvement_pct >= 0.0);
            assert!(report.final_solution.objective <= report.baseline.objective);

            let v_kmc = kmc_objective_for_labels(&ds, &report.baseline.labels, 3);
            assert!(report.baseline.objective as f64 <= 2.0 * v_kmc + 1e-9);

            // Even-integer descent caps the improving iterations.
            let improving = report
                .per_iteration_objectives
                .windows(2)
                .filter(|w| w[1] < w[0])
                .count();
            assert!(improving as u64 <= report.baseline.objective / 2 + 1);
        }
    }

    /// Each half-step is individually non-increasing under zero slack.
    #[test]
    fn half_steps_never_increase_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..10 {
            let ds = random_dataset(&mut rng, 4, 30);
            let k = 3;
            let mut cfg = KrcaConfig::new(k, trial);
            cfg.epsilon = 0.0;
            let report = krca(&ds, &cfg).unwrap();
            let mut centroids = report.baseline.centroids.clone();
            let labels = report.baseline.labels.clone();
            let before = objective(&ds, &centroids, &labels).unwrap();

            for cluster in 0..k {
                let members: Vec<_> = ds
                    .entries()
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == cluster)
                    .map(|(e, _)| e.clone())
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let sub = CountedDataset::from_entries(members).unwrap();
                centroids[cluster] = optimal_centroid(&sub).unwrap().0;
            }
            let after_update = objective(&ds, &centroids, &labels).unwrap();
            assert!(after_update <= before);

            let new_labels = auto_assign(&ds, &centroids, 0.0, 5).unwrap();
            let after_assign = objective(&ds, &centroids, &new_labels).unwrap();
            assert!(after_assign <= after_update);
        }
    }

    #[test]
    fn report_serializes_with_final_field() {
        let ds = build_dataset(&[vec![1, 2], vec![2, 1]]).unwrap();
        let report = krca(&ds, &KrcaConfig::new(1, 0)).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert!(json.get("final").is_some());
        assert!(json.get("baseline").is_some());
        assert!(json.get("per_iteration_objectives").is_some());
    }
}
