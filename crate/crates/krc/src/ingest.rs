//! Ratings-to-rankings pipeline: per-genre baselines, the activity filter
//! that turns sufficiently active users' rating deviations into rankings,
//! and the train/test prediction-accuracy protocol.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::centroid::rank_vector;
use crate::error::{KrcError, Result};
use crate::krca::{krca, KrcaConfig};
use crate::ranking::{sq_dist, CountedDataset, Ranking};

/// One user-item rating with a single genre tag.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsRecord {
    pub user_id: String,
    pub item_id: String,
    /// Genre index in `1..=m`.
    pub genre: u32,
    pub rating: f64,
}

/// Default accepted rating range.
pub const DEFAULT_RATING_BOUNDS: (f64, f64) = (0.5, 5.0);

/// Checks every record against the declared genre count and rating bounds.
pub fn validate_records(records: &[RatingsRecord], m: usize, bounds: (f64, f64)) -> Result<()> {
    for (row, r) in records.iter().enumerate() {
        if r.genre < 1 || r.genre as usize > m {
            return Err(KrcError::InvalidRecord {
                row,
                reason: format!("genre {} outside 1..={m}", r.genre),
            });
        }
        if !r.rating.is_finite() || r.rating < bounds.0 || r.rating > bounds.1 {
            return Err(KrcError::InvalidRecord {
                row,
                reason: format!("rating {} outside {:?}", r.rating, bounds),
            });
        }
    }
    Ok(())
}

/// Per-genre mean rating across all records.
#[derive(Clone, Debug, Serialize)]
pub struct GenreBaseline {
    means: Vec<f64>,
}

impl GenreBaseline {
    /// Mean rating of genre `g` (1-based).
    pub fn mean(&self, genre: u32) -> f64 {
        self.means[(genre - 1) as usize]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

/// Mean rating per genre over all records; every genre in `1..=m` must
/// appear at least once.
pub fn genre_baseline(records: &[RatingsRecord], m: usize) -> Result<GenreBaseline> {
    let mut sums = vec![0.0f64; m];
    let mut counts = vec![0u64; m];
    for r in records {
        let g = (r.genre - 1) as usize;
        sums[g] += r.rating;
        counts[g] += 1;
    }
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(KrcError::MissingGenre {
                genre: g as u32 + 1,
            });
        }
    }
    Ok(GenreBaseline {
        means: sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| s / c as f64)
            .collect(),
    })
}

/// Per-user rating aggregates, keyed in first-appearance order.
struct UserAggregates {
    order: Vec<String>,
    per_user: HashMap<String, Vec<(u64, f64)>>,
}

fn aggregate_users(records: &[RatingsRecord], m: usize) -> UserAggregates {
    let mut order = Vec::new();
    let mut per_user: HashMap<String, Vec<(u64, f64)>> = HashMap::new();
    for r in records {
        let stats = per_user.entry(r.user_id.clone()).or_insert_with(|| {
            order.push(r.user_id.clone());
            vec![(0u64, 0.0f64); m]
        });
        let g = (r.genre - 1) as usize;
        stats[g].0 += 1;
        stats[g].1 += r.rating;
    }
    UserAggregates { order, per_user }
}

/// Retains users with at least `lambda` ratings in every genre and ranks each
/// retained user's per-genre deviation from the baseline.
///
/// Coordinate `g` of the output ranking is the rank of the user's deviation
/// for genre `g` under descending order (rank 1 is the largest deviation);
/// ties break to the lower genre index. Users appear in first-appearance
/// order of the input records.
pub fn lambda_filter(
    records: &[RatingsRecord],
    m: usize,
    lambda: u64,
    baseline: &GenreBaseline,
) -> Vec<(String, Ranking)> {
    let agg = aggregate_users(records, m);
    let mut out = Vec::new();
    for user in agg.order {
        let stats = &agg.per_user[&user];
        if stats.iter().any(|&(count, _)| count < lambda) {
            continue;
        }
        let deltas: Vec<f64> = stats
            .iter()
            .enumerate()
            .map(|(g, &(count, sum))| sum / count as f64 - baseline.means()[g])
            .collect();
        // Descending deviations: negate and reuse the ascending ranker, whose
        // tie rule (lower coordinate first) is exactly the one wanted here.
        let negated: Vec<f64> = deltas.iter().map(|d| -d).collect();
        out.push((user, rank_vector(&negated)));
    }
    out
}

/// Outcome of the train/test protocol.
#[derive(Clone, Debug, Serialize)]
pub struct AccuracyReport {
    /// Percentage of test users whose nearest training centroid matches
    /// their training cluster.
    pub accuracy_pct: f64,
    /// Users surviving the filter in both halves.
    pub retained_users: usize,
    /// Test users equidistant to two or more training centroids; these are
    /// scored by the tie rule below.
    pub tied_predictions: usize,
    /// How equidistant users are scored.
    pub tie_rule: &'static str,
}

/// Splits records in half at random, filters each half, clusters the
/// training rankings of the common users, and scores each test user by
/// whether their nearest training centroid is their training cluster.
pub fn prediction_accuracy(
    records: &[RatingsRecord],
    m: usize,
    lambda: u64,
    k: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in records {
        if rng.random_bool(0.5) {
            train.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }

    let train_ranks = lambda_filter(&train, m, lambda, &genre_baseline(&train, m)?);
    let test_ranks = lambda_filter(&test, m, lambda, &genre_baseline(&test, m)?);
    let test_by_user: HashMap<&str, &Ranking> =
        test_ranks.iter().map(|(u, r)| (u.as_str(), r)).collect();

    // Users surviving both filters, in training-order.
    let common: Vec<(&str, &Ranking, &Ranking)> = train_ranks
        .iter()
        .filter_map(|(u, r)| test_by_user.get(u.as_str()).map(|t| (u.as_str(), r, *t)))
        .collect();
    let retained_users = common.len();
    if retained_users < k {
        return Err(KrcError::TooFewUsers {
            retained: retained_users,
            k,
        });
    }

    let ds = CountedDataset::from_rows(common.iter().map(|(_, r, _)| r.values()))?;
    let mut cfg = KrcaConfig::new(k, seed ^ 0x9e37_79b9_7f4a_7c15);
    cfg.epsilon = 0.0;
    let report = krca(&ds, &cfg)?;
    let centroids = &report.final_solution.centroids;

    // Entry index of each training ranking for cluster lookup.
    let mut entry_of: HashMap<&[u32], usize> = HashMap::new();
    for (i, e) in ds.entries().iter().enumerate() {
        entry_of.insert(e.ranking.values(), i);
    }

    let mut correct = 0usize;
    let mut tied_predictions = 0usize;
    for (_, train_rank, test_rank) in &common {
        let train_cluster = report.final_solution.labels[entry_of[train_rank.values()]];
        let mut best = (u64::MAX, 0usize);
        let mut tied = false;
        for (i, c) in centroids.iter().enumerate() {
            let d = sq_dist(test_rank, c)?;
            if d < best.0 {
                best = (d, i);
                tied = false;
            } else if d == best.0 {
                tied = true;
            }
        }
        if tied {
            tied_predictions += 1;
        }
        if best.1 == train_cluster {
            correct += 1;
        }
    }

    Ok(AccuracyReport {
        accuracy_pct: 100.0 * correct as f64 / retained_users as f64,
        retained_users,
        tied_predictions,
        tie_rule: "nearest-centroid ties resolve to the lowest centroid index",
    })
}

/// Reads ratings from CSV with the header `user_id,item_id,genre,rating`.
pub fn read_ratings_csv(path: &Path) -> Result<Vec<RatingsRecord>> {
    parse_ratings_csv(&std::fs::read_to_string(path)?)
}

/// Parses the ratings CSV format from an in-memory string.
pub fn parse_ratings_csv(text: &str) -> Result<Vec<RatingsRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "user_id,item_id,genre,rating" => {}
        Some((_, header)) => {
            return Err(KrcError::CsvParse {
                line: 1,
                reason: format!("expected header user_id,item_id,genre,rating, got {header:?}"),
            })
        }
        None => {
            return Err(KrcError::CsvParse {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(KrcError::CsvParse {
                line: idx + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let genre: u32 = fields[2].trim().parse().map_err(|_| KrcError::CsvParse {
            line: idx + 1,
            reason: format!("genre is not an integer: {:?}", fields[2]),
        })?;
        let rating: f64 = fields[3].trim().parse().map_err(|_| KrcError::CsvParse {
            line: idx + 1,
            reason: format!("rating is not a number: {:?}", fields[3]),
        })?;
        records.push(RatingsRecord {
            user_id: fields[0].trim().to_string(),
            item_id: fields[1].trim().to_string(),
            genre,
            rating,
        });
    }
    Ok(records)
}
