//! Gap-driven clusterability analysis on pseudo-distance data.
//!
//! The crate answers one family of questions: given pairwise dissimilarities
//! (no triangle inequality assumed) and a partition into blocks of at least
//! two points, is every between-block distance wide enough that the partition
//! is provably the k-means optimum — and can such structure be discovered,
//! planted, and preserved under distance transforms?
//!
//! Module map:
//!
//! - [`dataset`] / [`clustering`]: validated inputs — condensed symmetric
//!   distance storage, optional Euclidean embeddings, partitions with a
//!   minimum block size of two.
//! - [`cost`]: the pairwise k-means cost `Q`, the minimum distance `σ`, the
//!   residual slack `β`, and the report combining them.
//! - [`separability`]: the variational and residual wide-gap tests and the
//!   range (no-finer-structure) variant.
//! - [`clusterers`]: k-means++ style seeding (classic and residual-weighted),
//!   pairwise Lloyd refinement that never touches coordinates, and the
//!   descending-k structure discovery loop.
//! - [`transforms`]: scale, consistency-style, and squared-shift distance
//!   transforms, their verification clauses, and the Euclidean-embeddability
//!   shift.
//! - [`generators`]: datasets planted to pass a chosen separation test, with
//!   controllable gaps.
//! - [`oracle`]: exhaustive ground truth (partition enumeration), seeding
//!   hit-probability estimation, and the analytic lower bound.
//!
//! All randomized routines take explicit `u64` seeds and replay bit-for-bit;
//! see [`rng`] for how sub-streams are derived.

pub mod clusterers;
pub mod clustering;
pub mod cost;
pub mod dataset;
pub mod generators;
pub mod oracle;
pub mod rng;
pub mod separability;
pub mod tolerance;
pub mod transforms;

pub use clustering::Clustering;
pub use cost::CostReport;
pub use dataset::{Dataset, PseudoDistanceMatrix};
pub use separability::SeparabilityKind;
