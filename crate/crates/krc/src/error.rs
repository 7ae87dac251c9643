//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset construction, clustering, and the oracles.
#[derive(Debug, Error)]
pub enum KrcError {
    /// A candidate ranking was empty.
    #[error("empty ranking")]
    EmptyRanking,

    /// A candidate ranking repeats a value.
    #[error("duplicate entry {value} in ranking")]
    DuplicateValue { value: u32 },

    /// A candidate ranking contains a value outside 1..=m.
    #[error("entry {value} out of range 1..={dim} in ranking")]
    OutOfRange { value: u32, dim: usize },

    /// An input row failed ranking validation.
    #[error("invalid row {row}: {source}")]
    InvalidRow {
        row: usize,
        #[source]
        source: Box<KrcError>,
    },

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A dataset with no rows was supplied where one is required.
    #[error("empty dataset")]
    EmptyDataset,

    /// A cluster with no members was supplied where one is required.
    #[error("empty cluster")]
    EmptyCluster,

    /// A label referenced a centroid index that does not exist.
    #[error("label {label} out of range for {k} centroids")]
    LabelOutOfRange { label: usize, k: usize },

    /// Requested more clusters than there are distinct entries.
    #[error("k = {k} exceeds the {distinct} distinct entries")]
    InfeasibleK { k: usize, distinct: usize },

    /// No centroids were supplied to an assignment routine.
    #[error("at least one centroid is required")]
    NoCentroids,

    /// A negative pruning slack was supplied.
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),

    /// A configuration field is out of its accepted range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Exhaustive centroid search refused to run above its dimension cap.
    #[error("brute force cap exceeded: m = {m} > cap = {cap}")]
    BruteForceCapExceeded { m: usize, cap: usize },

    /// An exact oracle would exceed its enumeration budget.
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Rejection sampling failed to find admissible centroids.
    #[error("retry cap {cap} exceeded while sampling separated centroids")]
    RetryCapExceeded { cap: usize },

    /// A ranking is not of alternating-pair form.
    #[error("ranking is not an alternating-pair ranking at pair {pair}")]
    NotAlternatingPair { pair: usize },

    /// Two binary vectors that must share a length do not.
    #[error("binary length mismatch: {left} vs {right}")]
    BinaryLengthMismatch { left: usize, right: usize },

    /// A genre index had no ratings records.
    #[error("genre {genre} has no records")]
    MissingGenre { genre: u32 },

    /// A ratings record failed validation.
    #[error("invalid ratings record {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },

    /// Too few users survive filtering to form k clusters.
    #[error("only {retained} users retained, need at least k = {k}")]
    TooFewUsers { retained: usize, k: usize },

    /// A CSV line could not be parsed.
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KrcError>;
