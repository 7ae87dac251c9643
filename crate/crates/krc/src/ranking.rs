//! Ranking-vector domain types: validated permutations, squared distances,
//! counted datasets, and the integer clustering objective.
//!
//! A ranking over `m` options is a permutation of `1..=m` where the value at
//! coordinate `j` is the rank given to option `j`. Every accepted ranking
//! satisfies `sum = m(m+1)/2` and `sum of squares = m(m+1)(2m+1)/6`, and the
//! squared Euclidean distance between any two rankings is a non-negative even
//! integer (at least 2 when they differ). All distance and objective
//! arithmetic in this module is exact integer arithmetic.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KrcError, Result};

/// A permutation of `1..=m`, the fundamental observation and centroid type.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking(Vec<u32>);

impl Ranking {
    /// Validates `values` as a permutation of `1..=m` and wraps it.
    ///
    /// Rejects empty input, out-of-range entries, and duplicates, in that
    /// order of detection.
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(KrcError::EmptyRanking);
        }
        let m = values.len();
        let mut seen = vec![false; m];
        for &v in &values {
            if v < 1 || v as usize > m {
                return Err(KrcError::OutOfRange { value: v, dim: m });
            }
            let slot = &mut seen[(v - 1) as usize];
            if *slot {
                return Err(KrcError::DuplicateValue { value: v });
            }
            *slot = true;
        }
        Ok(Ranking(values))
    }

    /// The identity ranking `[1, 2, ..., m]`.
    pub fn identity(m: usize) -> Self {
        Ranking((1..=m as u32).collect())
    }

    /// The reversal ranking `[m, m-1, ..., 1]`.
    pub fn reversal(m: usize) -> Self {
        Ranking((1..=m as u32).rev().collect())
    }

    /// Number of options `m`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Rank values, one per option.
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    /// Consumes the ranking and returns the underlying values.
    pub fn into_values(self) -> Vec<u32> {
        self.0
    }

    pub(crate) fn from_values_unchecked(values: Vec<u32>) -> Self {
        debug_assert!(Ranking::new(values.clone()).is_ok());
        Ranking(values)
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ranking({:?})", self.0)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Validates an integer sequence as a ranking.
pub fn validate_ranking(values: &[u32]) -> Result<Ranking> {
    Ranking::new(values.to_vec())
}

/// Squared Euclidean distance between two rankings of equal dimension.
///
/// Always a non-negative even integer; zero iff the rankings are equal.
pub fn sq_dist(x: &Ranking, y: &Ranking) -> Result<u64> {
    if x.dim() != y.dim() {
        return Err(KrcError::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(sq_dist_unchecked(x.values(), y.values()))
}

/// Distance kernel shared by the hot loops; callers guarantee equal lengths.
#[inline]
pub(crate) fn sq_dist_unchecked(x: &[u32], y: &[u32]) -> u64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0u64;
    for (&a, &b) in x.iter().zip(y) {
        let d = a as i64 - b as i64;
        acc += (d * d) as u64;
    }
    acc
}

/// One distinct ranking together with its multiplicity in the input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DatasetEntry {
    pub ranking: Ranking,
    pub count: u64,
}

/// A deduplicated multiset of rankings; the input to all clustering.
///
/// Entries appear in first-appearance order of the input rows and every
/// downstream tie-break references that order, so construction from the same
/// row sequence is fully deterministic. The total row count `n` is preserved
/// through the counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountedDataset {
    m: usize,
    entries: Vec<DatasetEntry>,
    n: u64,
}

impl CountedDataset {
    /// Builds a dataset from rows, validating and deduplicating each.
    ///
    /// The first invalid row aborts construction with its zero-based index.
    /// An empty row sequence is rejected.
    pub fn from_rows<I, T>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u32]>,
    {
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut entries: Vec<DatasetEntry> = Vec::new();
        let mut m = 0usize;
        let mut n = 0u64;
        for (row, values) in rows.into_iter().enumerate() {
            let values = values.as_ref();
            if row == 0 {
                m = values.len();
            } else if values.len() != m {
                return Err(KrcError::InvalidRow {
                    row,
                    source: Box::new(KrcError::DimensionMismatch {
                        left: m,
                        right: values.len(),
                    }),
                });
            }
            match index.get(values) {
                Some(&at) => entries[at].count += 1,
                None => {
                    let ranking =
                        Ranking::new(values.to_vec()).map_err(|source| KrcError::InvalidRow {
                            row,
                            source: Box::new(source),
                        })?;
                    index.insert(values.to_vec(), entries.len());
                    entries.push(DatasetEntry { ranking, count: 1 });
                }
            }
            n += 1;
        }
        if entries.is_empty() {
            return Err(KrcError::EmptyDataset);
        }
        Ok(CountedDataset { m, entries, n })
    }

    /// Builds a dataset directly from validated entries.
    ///
    /// Intended for subsetting an existing dataset (per-cluster views);
    /// entries must be pairwise distinct rankings of one dimension with
    /// positive counts.
    pub fn from_entries(entries: Vec<DatasetEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(KrcError::EmptyDataset);
        }
        let m = entries[0].ranking.dim();
        let mut n = 0u64;
        for e in &entries {
            if e.ranking.dim() != m {
                return Err(KrcError::DimensionMismatch {
                    left: m,
                    right: e.ranking.dim(),
                });
            }
            n += e.count;
        }
        Ok(CountedDataset { m, entries, n })
    }

    /// Number of options `m`.
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Distinct entries in first-appearance order.
    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    /// Number of distinct rankings.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    /// Total row count `n` (sum of entry counts).
    pub fn total(&self) -> u64 {
        self.n
    }

    /// Re-expands the dataset into rows, each entry repeated by its count.
    pub fn expand_rows(&self) -> Vec<Ranking> {
        let mut rows = Vec::with_capacity(self.n as usize);
        for e in &self.entries {
            for _ in 0..e.count {
                rows.push(e.ranking.clone());
            }
        }
        rows
    }
}

/// Builds a validated, deduplicated dataset from integer rows.
pub fn build_dataset(rows: &[Vec<u32>]) -> Result<CountedDataset> {
    CountedDataset::from_rows(rows.iter().map(|r| r.as_slice()))
}

/// A feasible ranking-vector clustering: `k` ranking centroids, a label per
/// dataset entry, and the exact (even) integer objective.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KrcSolution {
    pub centroids: Vec<Ranking>,
    pub labels: Vec<usize>,
    pub objective: u64,
}

/// Count-weighted clustering objective for fixed centroids and labels.
///
/// Exact integer: sum over entries of `count * sq_dist(entry, centroid[label])`.
/// Always even.
pub fn objective(ds: &CountedDataset, centroids: &[Ranking], labels: &[usize]) -> Result<u64> {
    if labels.len() != ds.distinct() {
        return Err(KrcError::DimensionMismatch {
            left: labels.len(),
            right: ds.distinct(),
        });
    }
    let mut total = 0u64;
    for (entry, &label) in ds.entries().iter().zip(labels) {
        let centroid = centroids.get(label).ok_or(KrcError::LabelOutOfRange {
            label,
            k: centroids.len(),
        })?;
        total += entry.count * sq_dist(&entry.ranking, centroid)?;
    }
    Ok(total)
}

/// Reads rankings from CSV: one observation per line, comma-separated
/// integers, no header. The dimension is inferred from the first line.
pub fn read_rankings_csv(path: &Path) -> Result<Vec<Vec<u32>>> {
    let text = std::fs::read_to_string(path)?;
    parse_rankings_csv(&text)
}

/// Parses the CSV ranking format from an in-memory string.
pub fn parse_rankings_csv(text: &str) -> Result<Vec<Vec<u32>>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(',') {
            let v: u32 = tok.trim().parse().map_err(|_| KrcError::CsvParse {
                line: idx + 1,
                reason: format!("not an integer: {tok:?}"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes rankings in the CSV format read by [`read_rankings_csv`].
pub fn write_rankings_csv<'a, I>(rows: I) -> String
where
    I: IntoIterator<Item = &'a Ranking>,
{
    let mut out = String::new();
    for r in rows {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_identity_and_checks_characterization_sums() {
        let r = validate_ranking(&[1, 2, 3]).unwrap();
        let sum: u64 = r.values().iter().map(|&v| v as u64).sum();
        let sum_sq: u64 = r.values().iter().map(|&v| (v as u64).pow(2)).sum();
        assert_eq!(sum, 6); // m(m+1)/2 at m = 3
        assert_eq!(sum_sq, 14); // m(m+1)(2m+1)/6 at m = 3
    }

    #[test]
    fn rejects_duplicate() {
        match validate_ranking(&[2, 2, 3]) {
            Err(KrcError::DuplicateValue { value: 2 }) => {}
            other => panic!("expected duplicate rejection, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert!(matches!(
            validate_ranking(&[0, 1]),
            Err(KrcError::OutOfRange { value: 0, .. })
        ));
        assert!(matches!(
            validate_ranking(&[1, 4, 2]),
            Err(KrcError::OutOfRange { value: 4, .. })
        ));
        assert!(matches!(validate_ranking(&[]), Err(KrcError::EmptyRanking)));
    }

    #[test]
    fn accepts_312() {
        assert!(validate_ranking(&[3, 1, 2]).is_ok());
    }

    #[test]
    fn sq_dist_examples() {
        let a = validate_ranking(&[1, 2]).unwrap();
        let b = validate_ranking(&[2, 1]).unwrap();
        assert_eq!(sq_dist(&a, &b).unwrap(), 2);
        assert_eq!(sq_dist(&a, &a).unwrap(), 0);

        let x = validate_ranking(&[1, 2, 3, 4]).unwrap();
        let y = validate_ranking(&[3, 4, 1, 2]).unwrap();
        assert_eq!(sq_dist(&x, &y).unwrap(), 16);
    }

    #[test]
    fn sq_dist_dimension_mismatch() {
        let a = validate_ranking(&[1, 2]).unwrap();
        let b = validate_ranking(&[1, 2, 3]).unwrap();
        assert!(matches!(
            sq_dist(&a, &b),
            Err(KrcError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn build_dataset_counts_and_order() {
        let ds = build_dataset(&[vec![1, 2], vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(ds.distinct(), 2);
        assert_eq!(ds.total(), 3);
        assert_eq!(ds.entries()[0].ranking.values(), &[1, 2]);
        assert_eq!(ds.entries()[0].count, 2);
        assert_eq!(ds.entries()[1].ranking.values(), &[2, 1]);
        assert_eq!(ds.entries()[1].count, 1);
    }

    #[test]
    fn build_dataset_rejects_empty() {
        assert!(matches!(build_dataset(&[]), Err(KrcError::EmptyDataset)));
    }

    #[test]
    fn build_dataset_reports_bad_row_index() {
        let rows = vec![vec![1, 2, 3], vec![1, 2, 2], vec![3, 2, 1]];
        match build_dataset(&rows) {
            Err(KrcError::InvalidRow { row: 1, .. }) => {}
            other => panic!("expected row-1 failure, got {other:?}"),
        }
    }

    /// The five observations of the worked reconstruction example: one
    /// ranking appears twice, so the dataset holds 4 distinct entries.
    #[test]
    fn build_dataset_reconstruction_example() {
        let rows = vec![
            vec![1, 2, 3, 4],
            vec![1, 2, 3, 4],
            vec![1, 2, 4, 3],
            vec![3, 4, 1, 2],
            vec![3, 4, 2, 1],
        ];
        let ds = build_dataset(&rows).unwrap();
        assert_eq!(ds.distinct(), 4);
        assert_eq!(ds.total(), 5);
        assert_eq!(ds.entries()[0].count, 2);
        assert!(ds.entries().iter().skip(1).all(|e| e.count == 1));
    }

    #[test]
    fn objective_reconstruction_example() {
        let rows = vec![
            vec![1, 2, 3, 4],
            vec![1, 2, 3, 4],
            vec![1, 2, 4, 3],
            vec![3, 4, 1, 2],
            vec![3, 4, 2, 1],
        ];
        let ds = build_dataset(&rows).unwrap();
        let centroids = vec![
            validate_ranking(&[1, 2, 3, 4]).unwrap(),
            validate_ranking(&[3, 4, 1, 2]).unwrap(),
        ];
        // Entries: [1,2,3,4] x2, [1,2,4,3], [3,4,1,2], [3,4,2,1].
        let labels = vec![0, 0, 1, 1];
        assert_eq!(objective(&ds, &centroids, &labels).unwrap(), 4);
    }

    #[test]
    fn objective_zero_when_points_sit_on_centroids() {
        let ds = build_dataset(&[vec![1, 2], vec![2, 1]]).unwrap();
        let centroids = vec![
            validate_ranking(&[1, 2]).unwrap(),
            validate_ranking(&[2, 1]).unwrap(),
        ];
        assert_eq!(objective(&ds, &centroids, &[0, 1]).unwrap(), 0);
    }

    #[test]
    fn objective_single_cluster_tight_pair() {
        let ds = build_dataset(&[vec![1, 2], vec![2, 1]]).unwrap();
        let centroids = vec![validate_ranking(&[1, 2]).unwrap()];
        assert_eq!(objective(&ds, &centroids, &[0, 0]).unwrap(), 2);
    }

    #[test]
    fn objective_rejects_bad_label() {
        let ds = build_dataset(&[vec![1, 2]]).unwrap();
        let centroids = vec![validate_ranking(&[1, 2]).unwrap()];
        assert!(matches!(
            objective(&ds, &centroids, &[1]),
            Err(KrcError::LabelOutOfRange { label: 1, k: 1 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let text = "1,2,3\n3,2,1\n";
        let rows = parse_rankings_csv(text).unwrap();
        let ds = build_dataset(&rows).unwrap();
        let out = write_rankings_csv(ds.entries().iter().map(|e| &e.ranking));
        assert_eq!(out, text);
    }

    fn ranking_strategy(max_m: usize) -> impl Strategy<Value = Ranking> {
        (1..=max_m).prop_flat_map(|m| {
            Just((1..=m as u32).collect::<Vec<_>>())
                .prop_shuffle()
                .prop_map(Ranking::from_values_unchecked)
        })
    }

    proptest! {
        /// Both characterization identities hold on every accepted ranking.
        #[test]
        fn characterization_identities(r in ranking_strategy(10)) {
            let m = r.dim() as u64;
            let sum: u64 = r.values().iter().map(|&v| v as u64).sum();
            let sum_sq: u64 = r.values().iter().map(|&v| (v as u64).pow(2)).sum();
            prop_assert_eq!(sum, m * (m + 1) / 2);
            prop_assert_eq!(sum_sq, m * (m + 1) * (2 * m + 1) / 6);
        }

        /// Distances are even, symmetric, zero iff equal, and at least 2
        /// between distinct rankings.
        #[test]
        fn distance_properties(m in 2usize..8, seed in any::<u64>()) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a: Vec<u32> = (1..=m as u32).collect();
            let mut b = a.clone();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let a = Ranking::new(a).unwrap();
            let b = Ranking::new(b).unwrap();
            let d = sq_dist(&a, &b).unwrap();
            prop_assert_eq!(d % 2, 0);
            prop_assert_eq!(d, sq_dist(&b, &a).unwrap());
            if a == b {
                prop_assert_eq!(d, 0);
            } else {
                prop_assert!(d >= 2);
            }
        }

        /// Dedup then re-expansion recovers the input multiset.
        #[test]
        fn expansion_recovers_multiset(rows in proptest::collection::vec(
            Just(vec![1u32, 2, 3]).prop_shuffle(), 1..20)) {
            let ds = build_dataset(&rows).unwrap();
            let mut expanded: Vec<Vec<u32>> =
                ds.expand_rows().into_iter().map(Ranking::into_values).collect();
            let mut input = rows.clone();
            expanded.sort();
            input.sort();
            prop_assert_eq!(expanded, input);
        }
    }
}
