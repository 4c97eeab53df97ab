//! Wide-gap separation tests.
//!
//! A clustering passes a separation test when every between-block distance
//! clears a threshold computed from the clustering's own cost statistics:
//!
//! - **variational**: threshold `√2·√Q`. Clearing it certifies the
//!   clustering as the unique global k-means optimum for its k.
//! - **residual**: threshold `√β` with `β = 2·(Q − (n−k−1)·σ²/2)` — a
//!   weaker gap that still certifies global optimality (uniqueness not
//!   guaranteed).
//!
//! The **range** variant additionally demands that no block, viewed as its
//! own dataset, admits a finer separation of the same kind — the partition
//! is structure all the way down.
//!
//! All threshold comparisons are tolerance-adjusted strict `>`: a gap
//! exactly at the threshold does not separate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusterers;
use crate::clustering::{Clustering, ClusteringError};
use crate::cost::{self, CostError};
use crate::dataset::Dataset;
use crate::oracle;
use crate::rng;
use crate::tolerance;

/// Which separation criterion to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparabilityKind {
    Variational,
    Residual,
}

impl SeparabilityKind {
    /// Threshold the between-block gap must clear, from a cost report's
    /// statistics. `None` when the residual slack is negative (no valid
    /// dataset produces that, but arithmetic is guarded anyway).
    fn threshold(self, q: f64, beta: f64) -> Option<f64> {
        match self {
            SeparabilityKind::Variational => Some((2.0 * q).sqrt()),
            SeparabilityKind::Residual => (beta >= 0.0).then(|| beta.sqrt()),
        }
    }
}

impl std::fmt::Display for SeparabilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeparabilityKind::Variational => "variational",
            SeparabilityKind::Residual => "residual",
        })
    }
}

/// Failures of the separation tests.
#[derive(Debug, Error)]
pub enum SeparabilityError {
    #[error("separation tests need at least 2 blocks, got k = {0}")]
    KTooSmall(usize),
    #[error("residual slack β = {0} is negative; the residual threshold is undefined")]
    NegativeBeta(f64),
    #[error("range checks need a search depth K ≥ 2, got {0}")]
    RangeDepthTooSmall(usize),
    #[error(transparent)]
    InvalidClustering(#[from] ClusteringError),
}

impl From<CostError> for SeparabilityError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::InvalidClustering(c) => SeparabilityError::InvalidClustering(c),
            // Cost computations on validated inputs never lack an
            // embedding; the pairwise form is used throughout.
            CostError::NoEmbedding => unreachable!("separation tests use the pairwise cost"),
        }
    }
}

/// How the sub-separation search of a range check was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSearchSummary {
    /// Blocks searched by exhaustive partition scan (≤ 12 points).
    pub exhaustive_blocks: usize,
    /// Blocks searched through seeded clusterer candidates.
    pub heuristic_blocks: usize,
}

/// Outcome of a separation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub kind: SeparabilityKind,
    pub separable: bool,
    /// The gap the between-block distances had to clear.
    pub threshold: f64,
    /// Smallest between-block distance found.
    pub min_inter: f64,
    /// Present exactly when not separable. For a plain gap failure this is
    /// the closest between-block pair; when a range check fails because a
    /// block splits further, it is the closest between-block pair *of the
    /// discovered sub-separation*, in original point ids.
    pub witness_pair: Option<(usize, usize)>,
    /// For passing range checks: the certified block count.
    pub level: Option<usize>,
    /// For range checks: how sub-separations were searched.
    pub sub_search: Option<SubSearchSummary>,
}

fn check_gap(
    dataset: &Dataset,
    clustering: &Clustering,
    kind: SeparabilityKind,
) -> Result<SeparabilityReport, SeparabilityError> {
    if clustering.k() < 2 {
        return Err(SeparabilityError::KTooSmall(clustering.k()));
    }
    clustering.ensure_covers(dataset.n())?;
    let q = cost::kmeans_cost(dataset, clustering)?;
    let beta = cost::residual_slack(dataset, clustering)?;
    let threshold = kind
        .threshold(q, beta)
        .ok_or(SeparabilityError::NegativeBeta(beta))?;
    let (i, l, min_inter) = cost::closest_inter_pair(dataset, clustering)?
        .expect("k ≥ 2 guarantees a between-block pair");
    let separable = tolerance::definitely_greater(min_inter, threshold);
    Ok(SeparabilityReport {
        kind,
        separable,
        threshold,
        min_inter,
        witness_pair: (!separable).then_some((i, l)),
        level: None,
        sub_search: None,
    })
}

/// Test the wide-gap criterion that certifies the clustering as the unique
/// global k-means optimum: every between-block distance must exceed `√2·√Q`.
pub fn check_variational(
    dataset: &Dataset,
    clustering: &Clustering,
) -> Result<SeparabilityReport, SeparabilityError> {
    check_gap(dataset, clustering, SeparabilityKind::Variational)
}

/// Test the weaker residual criterion: every between-block distance must
/// exceed `√β`. Errors with [`SeparabilityError::NegativeBeta`] rather than
/// reporting a zero threshold if β is negative.
pub fn check_residual(
    dataset: &Dataset,
    clustering: &Clustering,
) -> Result<SeparabilityReport, SeparabilityError> {
    check_gap(dataset, clustering, SeparabilityKind::Residual)
}

/// Blocks of at most this many points get exhaustive sub-separation
/// search; larger ones fall back to seeded clusterer candidates.
pub const MAX_SUBSEARCH_EXHAUSTIVE: usize = 12;

/// Fixed base seed for the heuristic sub-search; `check_range` takes no
/// rng input, so determinism comes from a constant mixed with the block
/// size and tried k.
const SUBSEARCH_SEED: u64 = 0x5eed0f9a95;

/// Search for any k-block separation of `kind` on `dataset`.
///
/// A separation, when one exists, minimizes the cost over all admissible
/// k-partitions — so it suffices to test the exhaustive optimum (and its
/// cost ties) for small datasets, or the best seeded-and-refined candidate
/// for large ones. The heuristic path can miss with small probability; the
/// exhaustive path cannot. Returns the separation found, if any.
pub fn find_separation(dataset: &Dataset, k: usize, kind: SeparabilityKind) -> Option<Clustering> {
    let n = dataset.n();
    if k < 2 || 2 * k > n {
        return None;
    }
    let passes =
        |c: &Clustering| -> bool { check_gap(dataset, c, kind).is_ok_and(|r| r.separable) };
    if n <= MAX_SUBSEARCH_EXHAUSTIVE {
        let result = oracle::exhaustive_optimum(dataset, k)
            .expect("n and k were checked against the exhaustive limits");
        if passes(&result.best_clustering) {
            return Some(result.best_clustering);
        }
        return result.ties.into_iter().find(passes);
    }
    let seed = rng::derive_seed(SUBSEARCH_SEED, &[n as u64, k as u64]);
    let candidate =
        clusterers::best_of_restarts(dataset, k, kind, seed, clusterers::DEFAULT_RESTARTS)
            .expect("k range was checked and the restart count is positive");
    passes(&candidate.clustering).then_some(candidate.clustering)
}

/// Range variant: the clustering must pass its kind's gap test **and** no
/// block may admit a k′-separation of the same kind for any k′ in
/// `2..=depth+1`, treating the block as its own dataset (σ and cost
/// recomputed on the restriction). Blocks of fewer than 4 points cannot
/// split and are skipped. On success `level` is the clustering's k.
pub fn check_range(
    dataset: &Dataset,
    clustering: &Clustering,
    kind: SeparabilityKind,
    depth: usize,
) -> Result<SeparabilityReport, SeparabilityError> {
    if depth < 2 {
        return Err(SeparabilityError::RangeDepthTooSmall(depth));
    }
    let mut report = check_gap(dataset, clustering, kind)?;
    let mut summary = SubSearchSummary {
        exhaustive_blocks: 0,
        heuristic_blocks: 0,
    };
    if !report.separable {
        report.sub_search = Some(summary);
        return Ok(report);
    }
    for members in clustering.blocks() {
        if members.len() < 4 {
            continue;
        }
        if members.len() <= MAX_SUBSEARCH_EXHAUSTIVE {
            summary.exhaustive_blocks += 1;
        } else {
            summary.heuristic_blocks += 1;
        }
        let sub = dataset
            .restrict(&members)
            .expect("block members are distinct in-range ids");
        for sub_k in 2..=(depth + 1) {
            if let Some(split) = find_separation(&sub, sub_k, kind) {
                let (a, b, _) = cost::closest_inter_pair(&sub, &split)
                    .expect("split covers the restriction")
                    .expect("split has at least two blocks");
                report.separable = false;
                report.witness_pair = Some((members[a], members[b]));
                report.level = None;
                report.sub_search = Some(summary);
                return Ok(report);
            }
        }
    }
    report.level = Some(clustering.k());
    report.sub_search = Some(summary);
    Ok(report)
}
