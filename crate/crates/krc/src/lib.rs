//! Clustering of ranking vectors under squared Euclidean distance, where both
//! observations and centroids are permutations of `1..=m`.
//!
//! The pieces:
//!
//! - [`ranking`]: validated permutations, exact integer distances, counted
//!   datasets, and the clustering objective.
//! - [`centroid`]: the closed-form optimal centroid of a single cluster and
//!   the exhaustive oracle that certifies it.
//! - [`kmc`]: the k-means baseline (seeding, Lloyd, and the snap to a
//!   feasible ranking solution).
//! - [`assign`]: cluster reconstruction by exhaustive search or by a
//!   branch-and-bound tree over shared prefixes with a pruning slack.
//! - [`krca`]: the refinement loop alternating centroid updates with
//!   reconstruction, plus its report type.
//! - [`generators`]: seeded synthetic instances (uniform, swap-walk
//!   clustered, and the tight two-to-one family).
//! - [`theory`]: binary-vector reduction maps, exact tiny-instance oracles,
//!   and the worst-case tree-depth bound.
//! - [`ingest`]: the ratings-to-rankings pipeline and its train/test
//!   accuracy protocol.
//!
//! # Example
//!
//! ```
//! use krc::prelude::*;
//!
//! let ds = build_dataset(&[
//!     vec![1, 2, 3],
//!     vec![2, 1, 3],
//!     vec![3, 2, 1],
//!     vec![3, 2, 1],
//! ])?;
//! let report = krca(&ds, &KrcaConfig::new(2, 42))?;
//! assert!(report.final_solution.objective <= report.baseline.objective);
//! # Ok::<(), krc::KrcError>(())
//! ```

pub mod assign;
pub mod bench;
pub mod centroid;
pub mod error;
pub mod generators;
pub mod ingest;
pub mod kmc;
pub mod krca;
pub mod ranking;
pub mod theory;

pub use error::{KrcError, Result};

/// The commonly used names in one import.
pub mod prelude {
    pub use crate::assign::{
        assign_bnb, assign_bnb_with_stats, assign_es, auto_assign, auto_assign_with_stats,
        node_bounds, AssignMethod, AssignStats, CentroidBounds, DEFAULT_BNB_THRESHOLD,
    };
    pub use crate::bench::{crossover_sweep, label_rows_scan, label_rows_tree, CrossoverPoint};
    pub use crate::centroid::{
        brute_force_centroid, column_means, optimal_centroid, rank_of_means, rank_vector,
        ColumnMeans,
    };
    pub use crate::error::{KrcError, Result};
    pub use crate::generators::{
        gen_swap_clustered, gen_tightness, gen_uniform, gen_uniform_rows, swap_adjacent_values,
        swap_walk, uniform_distinct_rankings, SwapClusterSpec, SwapClusteredInstance,
        TightnessInstance,
    };
    pub use crate::ingest::{
        genre_baseline, lambda_filter, prediction_accuracy, read_ratings_csv, AccuracyReport,
        GenreBaseline, RatingsRecord,
    };
    pub use crate::kmc::{kmeanspp_seed, lloyd, snap_to_krc, KmcSolution, RealPoint};
    pub use crate::krca::{
        empty_cluster_repair, krca, relative_improvement, KrcaConfig, KrcaReport,
    };
    pub use crate::ranking::{
        build_dataset, objective, read_rankings_csv, sq_dist, validate_ranking, write_rankings_csv,
        CountedDataset, DatasetEntry, KrcSolution, Ranking,
    };
    pub use crate::theory::{
        alt_pair_inverse, alt_pair_transform, exact_kmc_oracle, exact_krc_oracle, hamming,
        mu_depth_bound, BinaryVector,
    };
}
