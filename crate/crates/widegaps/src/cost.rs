//! The pairwise k-means cost and the gap statistics built on it.
//!
//! The cost of a clustering is computed purely from pairwise distances:
//! every block contributes the sum of squared distances over its member
//! pairs, divided by the block size. For Euclidean data this equals the
//! familiar sum of squared distances to block centroids, which is exposed
//! separately as [`kmeans_cost_centroid`] so the two routes can be checked
//! against each other.
//!
//! Two derived quantities drive the separation tests:
//!
//! - σ — the minimum off-diagonal distance of the dataset;
//! - β — the residual slack `2·(Q − (n−k−1)·σ²/2)`, always at least σ²
//!   because `Q ≥ (n−k)·σ²/2` holds for every admissible partition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{Clustering, ClusteringError};
use crate::dataset::Dataset;

/// Failures of cost computations.
#[derive(Debug, Error)]
pub enum CostError {
    #[error(transparent)]
    InvalidClustering(#[from] ClusteringError),
    #[error("dataset has no embedding; the centroid form needs coordinates")]
    NoEmbedding,
}

/// k-means cost in pairwise form: `Σ_blocks (pair sum of d²) / |block|`.
///
/// Equivalently, each block contributes `1/(2|C|)` times the sum of squared
/// distances over all ordered member pairs.
pub fn kmeans_cost(dataset: &Dataset, clustering: &Clustering) -> Result<f64, CostError> {
    clustering.ensure_covers(dataset.n())?;
    let mut pair_sums = vec![0.0f64; clustering.k()];
    for (i, l, d) in dataset.distances().iter_pairs() {
        let (a, b) = (clustering.label_of(i), clustering.label_of(l));
        if a == b {
            pair_sums[a] += d * d;
        }
    }
    let sizes = clustering.block_sizes();
    Ok(pair_sums
        .iter()
        .zip(&sizes)
        .map(|(&s, &size)| s / size as f64)
        .sum())
}

/// k-means cost through block centroids: `Σ_points ‖x − μ(block)‖²`.
/// Needs an embedding; agrees with [`kmeans_cost`] on Euclidean data.
pub fn kmeans_cost_centroid(dataset: &Dataset, clustering: &Clustering) -> Result<f64, CostError> {
    clustering.ensure_covers(dataset.n())?;
    let points = dataset.embedding().ok_or(CostError::NoEmbedding)?;
    let dim = points[0].len();
    let k = clustering.k();
    let mut centroids = vec![vec![0.0f64; dim]; k];
    let sizes = clustering.block_sizes();
    for (point, coords) in points.iter().enumerate() {
        let label = clustering.label_of(point);
        for (c, x) in centroids[label].iter_mut().zip(coords) {
            *c += x;
        }
    }
    for (centroid, &size) in centroids.iter_mut().zip(&sizes) {
        for c in centroid.iter_mut() {
            *c /= size as f64;
        }
    }
    let mut cost = 0.0;
    for (point, coords) in points.iter().enumerate() {
        let centroid = &centroids[clustering.label_of(point)];
        cost += coords
            .iter()
            .zip(centroid)
            .map(|(x, c)| (x - c) * (x - c))
            .sum::<f64>();
    }
    Ok(cost)
}

/// Residual slack `β = 2·(Q − (n−k−1)·σ²/2)`.
///
/// `Q ≥ (n−k)·σ²/2` for every admissible partition, so β ≥ σ² > 0 on valid
/// inputs; callers that take β from untrusted arithmetic still guard the
/// sign before taking √β.
pub fn residual_slack(dataset: &Dataset, clustering: &Clustering) -> Result<f64, CostError> {
    let q = kmeans_cost(dataset, clustering)?;
    let sigma = dataset.min_distance();
    let n = dataset.n() as f64;
    let k = clustering.k() as f64;
    Ok(2.0 * (q - (n - k - 1.0) * sigma * sigma / 2.0))
}

/// The closest pair of points lying in different blocks, if any
/// (`None` for the one-block partition). Ties resolve to the pair with the
/// smallest ids in scan order.
pub fn closest_inter_pair(
    dataset: &Dataset,
    clustering: &Clustering,
) -> Result<Option<(usize, usize, f64)>, CostError> {
    clustering.ensure_covers(dataset.n())?;
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, l, d) in dataset.distances().iter_pairs() {
        if clustering.label_of(i) != clustering.label_of(l) && best.is_none_or(|(_, _, b)| d < b) {
            best = Some((i, l, d));
        }
    }
    Ok(best)
}

/// Cost and gap statistics of one clustering on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Pairwise k-means cost.
    pub q: f64,
    /// Minimum off-diagonal distance of the dataset.
    pub sigma: f64,
    /// Residual slack `2·(Q − (n−k−1)·σ²/2)`.
    pub beta: f64,
    /// Gap a variational separation must clear: `√2·√Q`.
    pub variational_threshold: f64,
    /// Gap a residual separation must clear: `√β`; undefined when β < 0.
    pub residual_threshold: Option<f64>,
    /// Minimal between-block distance; `None` for the one-block partition.
    pub min_inter: Option<f64>,
    /// Number of points.
    pub n: usize,
    /// Number of blocks.
    pub k: usize,
}

impl CostReport {
    /// Compute all statistics for one (dataset, clustering) pair.
    pub fn compute(dataset: &Dataset, clustering: &Clustering) -> Result<Self, CostError> {
        let q = kmeans_cost(dataset, clustering)?;
        let sigma = dataset.min_distance();
        let beta = residual_slack(dataset, clustering)?;
        let min_inter = closest_inter_pair(dataset, clustering)?.map(|(_, _, d)| d);
        Ok(CostReport {
            q,
            sigma,
            beta,
            variational_threshold: (2.0 * q).sqrt(),
            residual_threshold: (beta >= 0.0).then(|| beta.sqrt()),
            min_inter,
            n: dataset.n(),
            k: clustering.k(),
        })
    }
}
