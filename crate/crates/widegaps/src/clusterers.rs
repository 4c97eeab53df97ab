//! Seeded, refined k-means-style clusterers that run directly on
//! pseudo-distances — no coordinates required.
//!
//! The pipeline has three stages, each usable on its own:
//!
//! 1. **Seeding** ([`seed_with_variant`]): draw k seed points, the first
//!    uniformly, each later one with probability proportional to a
//!    per-point weight. The classic variant weights by squared distance
//!    to the nearest seed; the residual variant subtracts the global
//!    minimum distance squared first, which steers seeds away from points
//!    that are merely σ-far. Every draw's weights are kept in a
//!    [`SeedingTrace`] so tests can audit the distribution actually used.
//! 2. **Refinement** ([`refine_pairwise`]): nearest-seed initialization
//!    followed by single-point moves. A move candidate is picked by the
//!    per-block affinity `f`, but only executed when the exact cost delta
//!    is negative, so the cost is monotone even on data violating the
//!    triangle inequality (where `f` alone can mislead). Blocks never
//!    shrink below two points.
//! 3. **Range discovery** ([`discover_range`]): scan k downward from a
//!    ceiling, accept the first k whose best refined clustering passes the
//!    requested separation test and whose blocks hide no finer separation,
//!    falling through to the one-block clustering when nothing passes.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{Clustering, ClusteringError};
use crate::cost;
use crate::dataset::Dataset;
use crate::rng;
use crate::separability::{self, SeparabilityError, SeparabilityKind};
use crate::tolerance;

/// Which seeding distribution to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedingVariant {
    /// Weight = squared distance to the closest seed so far.
    Classic,
    /// Weight = squared distance to the closest seed minus σ², clamped
    /// at zero (σ = smallest distance in the dataset).
    Residual,
}

/// The seeding distribution that matches a separation criterion: the
/// residual test pairs with residual seeding, the variational test with
/// the classic one.
pub fn seeding_for(kind: SeparabilityKind) -> SeedingVariant {
    match kind {
        SeparabilityKind::Variational => SeedingVariant::Classic,
        SeparabilityKind::Residual => SeedingVariant::Residual,
    }
}

/// Failures of seeding, refinement, and range discovery.
#[derive(Debug, Error)]
pub enum ClustererError {
    #[error("seeding needs 2 ≤ k ≤ n/2, got k = {k} with n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("seed ids must be distinct points of the dataset; offending id {0}")]
    BadSeed(usize),
    #[error("at least one restart is required")]
    NoRestarts,
    #[error(transparent)]
    InvalidClustering(#[from] ClusteringError),
}

/// Full record of one seeding run: the seeds in draw order plus, for each
/// draw, the weight vector it sampled from. `step_weights[0]` is the
/// all-ones vector of the uniform first draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingTrace {
    pub seeds: Vec<usize>,
    pub step_weights: Vec<Vec<f64>>,
    /// Draw indices where every candidate weight was zero and the seed
    /// was instead chosen uniformly among non-seeds (residual variant
    /// only; the classic weights cannot all vanish on distinct points).
    pub uniform_fallback_steps: Vec<usize>,
    pub rng_seed: u64,
    /// Per step, which blocks of a reference clustering held a seed after
    /// that draw. Seeding cannot know this on its own; it is filled by
    /// [`SeedingTrace::annotate_hits`] when a planted clustering exists.
    pub clusters_hit: Option<Vec<Vec<bool>>>,
}

impl SeedingTrace {
    /// Wrap externally chosen seeds, e.g. to hand a known-good start to
    /// [`refine_pairwise`] in tests.
    pub fn from_seeds(seeds: Vec<usize>, rng_seed: u64) -> Self {
        SeedingTrace {
            seeds,
            step_weights: Vec::new(),
            uniform_fallback_steps: Vec::new(),
            rng_seed,
            clusters_hit: None,
        }
    }

    /// Record, per draw, the cumulative block coverage with respect to a
    /// known clustering (typically the planted one).
    pub fn annotate_hits(&mut self, reference: &Clustering) {
        let mut hit = vec![false; reference.k()];
        let mut rows = Vec::with_capacity(self.seeds.len());
        for &s in &self.seeds {
            hit[reference.label_of(s)] = true;
            rows.push(hit.clone());
        }
        self.clusters_hit = Some(rows);
    }

    /// Which blocks of `clustering` contain at least one seed.
    pub fn hit_blocks(&self, clustering: &Clustering) -> Vec<bool> {
        let mut hit = vec![false; clustering.k()];
        for &s in &self.seeds {
            hit[clustering.label_of(s)] = true;
        }
        hit
    }

    /// True when every block of `clustering` contains a seed.
    pub fn hits_all_blocks(&self, clustering: &Clustering) -> bool {
        self.hit_blocks(clustering).into_iter().all(|h| h)
    }
}

/// Draw k seeds from `dataset` with the given variant's distribution.
///
/// The first seed is uniform; each subsequent draw samples proportionally
/// to the variant's per-point weight against the seeds chosen so far.
/// Points already chosen have weight zero and cannot repeat. Requires
/// `2 ≤ k ≤ n/2` so that a k-block clustering with two points per block
/// remains possible downstream.
pub fn seed_with_variant(
    dataset: &Dataset,
    k: usize,
    rng_seed: u64,
    variant: SeedingVariant,
) -> Result<SeedingTrace, ClustererError> {
    let n = dataset.n();
    if k < 2 || 2 * k > n {
        return Err(ClustererError::KOutOfRange { k, n });
    }
    let floor_sq = match variant {
        SeedingVariant::Classic => 0.0,
        SeedingVariant::Residual => {
            let s = dataset.min_distance();
            s * s
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    let mut step_weights: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut uniform_fallback_steps: Vec<usize> = Vec::new();
    let mut closest_sq = vec![f64::INFINITY; n];
    for step in 0..k {
        let weights: Vec<f64> = if step == 0 {
            vec![1.0; n]
        } else {
            let last = *seeds.last().expect("previous step pushed a seed");
            for (i, c) in closest_sq.iter_mut().enumerate() {
                let d = dataset.distance(i, last);
                *c = c.min(d * d);
            }
            closest_sq
                .iter()
                .map(|&c| (c - floor_sq).max(0.0))
                .collect()
        };
        let choice = match WeightedIndex::new(weights.iter().copied()) {
            Ok(dist) => rng.sample(&dist),
            Err(_) => {
                uniform_fallback_steps.push(step);
                let open: Vec<usize> = (0..n).filter(|i| !seeds.contains(i)).collect();
                open[rng.random_range(0..open.len())]
            }
        };
        step_weights.push(weights);
        seeds.push(choice);
    }
    Ok(SeedingTrace {
        seeds,
        step_weights,
        uniform_fallback_steps,
        rng_seed,
        clusters_hit: None,
    })
}

/// Classic k-means++ seeding: weight = squared distance to the closest
/// seed. See [`seed_with_variant`].
pub fn seed_kmeanspp(
    dataset: &Dataset,
    k: usize,
    rng_seed: u64,
) -> Result<SeedingTrace, ClustererError> {
    seed_with_variant(dataset, k, rng_seed, SeedingVariant::Classic)
}

/// Residual seeding: weight = squared distance to the closest seed minus
/// σ², clamped at zero. See [`seed_with_variant`].
pub fn seed_res_kmeanspp(
    dataset: &Dataset,
    k: usize,
    rng_seed: u64,
) -> Result<SeedingTrace, ClustererError> {
    seed_with_variant(dataset, k, rng_seed, SeedingVariant::Residual)
}

/// Hard cap on refinement sweeps; reaching it is reported, not hidden.
pub const MAX_SWEEPS: usize = 500;

/// Result of [`refine_pairwise`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub clustering: Clustering,
    /// Final clustering cost.
    pub q: f64,
    /// Sweeps executed, including the final no-move sweep.
    pub sweeps: usize,
    /// Move candidates vetoed by the exact cost delta or by the
    /// minimum-block-size rule.
    pub rejected_moves: usize,
    /// True when the sweep cap was hit before the partition stabilized.
    pub hit_sweep_cap: bool,
}

/// Per-point squared-distance sums into each block, the per-block pair
/// sums, and block sizes — the state a refinement sweep works on.
struct SweepState {
    /// `s[i * k + c]` = Σ over points l in block c of d²(i, l).
    s: Vec<f64>,
    /// `p[c]` = Σ over unordered pairs inside block c of d².
    p: Vec<f64>,
    sizes: Vec<usize>,
    k: usize,
}

impl SweepState {
    fn rebuild(sq: &[Vec<f64>], labels: &[usize], k: usize) -> Self {
        let n = labels.len();
        let mut s = vec![0.0; n * k];
        let mut p = vec![0.0; k];
        let mut sizes = vec![0usize; k];
        for (i, &li) in labels.iter().enumerate() {
            sizes[li] += 1;
            for l in (i + 1)..n {
                let d2 = sq[i][l];
                s[i * k + labels[l]] += d2;
                s[l * k + li] += d2;
                if labels[l] == li {
                    p[li] += d2;
                }
            }
        }
        SweepState { s, p, sizes, k }
    }

    /// Affinity of point i to block c: mean squared distance into the
    /// block minus the block's internal mean pair term. Lower is closer.
    fn affinity(&self, i: usize, c: usize) -> f64 {
        let size = self.sizes[c] as f64;
        self.s[i * self.k + c] / size - self.p[c] / (size * size)
    }

    /// Exact cost change of moving point i from block `from` (which still
    /// contains it) to block `to`. Pure algebra on the pair sums — valid
    /// for any symmetric pseudo-distances.
    fn move_delta(&self, i: usize, from: usize, to: usize) -> f64 {
        let a = self.sizes[from] as f64;
        let b = self.sizes[to] as f64;
        b / (b + 1.0) * self.affinity(i, to) - a / (a - 1.0) * self.affinity(i, from)
    }

    fn apply_move(&mut self, sq: &[Vec<f64>], labels: &mut [usize], i: usize, to: usize) {
        let from = labels[i];
        self.p[from] -= self.s[i * self.k + from];
        self.p[to] += self.s[i * self.k + to];
        for (l, row) in sq.iter().enumerate() {
            if l != i {
                let d2 = row[i];
                self.s[l * self.k + from] -= d2;
                self.s[l * self.k + to] += d2;
            }
        }
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
        labels[i] = to;
    }
}

/// Nearest-seed initial labels, ties to the lowest seed index.
fn nearest_seed_labels(sq: &[Vec<f64>], seeds: &[usize]) -> Vec<usize> {
    let n = sq.len();
    let mut labels = vec![0usize; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = f64::INFINITY;
        for (j, &s) in seeds.iter().enumerate() {
            let d2 = sq[i][s];
            if d2 < best {
                best = d2;
                *label = j;
            }
        }
    }
    labels
}

/// Grow every one-point block to two before sweeps start: a singleton's
/// only member is its own seed, and the donor is the non-seed point
/// closest to that seed among blocks that can spare one (size ≥ 3),
/// lowest id on ties. Feasible whenever k ≤ n/2.
fn repair_singletons(sq: &[Vec<f64>], seeds: &[usize], labels: &mut [usize]) {
    let k = seeds.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for block in 0..k {
        while sizes[block] < 2 {
            let anchor = seeds[block];
            let donor = (0..labels.len())
                .filter(|&i| sizes[labels[i]] >= 3 && !seeds.contains(&i))
                .min_by(|&x, &y| {
                    sq[x][anchor]
                        .partial_cmp(&sq[y][anchor])
                        .expect("distances are finite")
                        .then(x.cmp(&y))
                })
                .expect("k ≤ n/2 leaves a block of three or more");
            sizes[labels[donor]] -= 1;
            sizes[block] += 1;
            labels[donor] = block;
        }
    }
}

/// Refine a clustering from a seeding trace by single-point moves.
///
/// Initial blocks come from nearest-seed assignment (ties to the lowest
/// seed index), then each sweep visits points in id order. The candidate
/// target for a point is the block with the lowest affinity; the move is
/// executed only when it would not empty its block below two points
/// **and** the exact cost delta is negative. Sweeps repeat until a full
/// pass makes no move or [`MAX_SWEEPS`] is reached.
pub fn refine_pairwise(
    dataset: &Dataset,
    trace: &SeedingTrace,
) -> Result<Refinement, ClustererError> {
    let seeds = &trace.seeds;
    let n = dataset.n();
    let k = seeds.len();
    if k < 2 || 2 * k > n {
        return Err(ClustererError::KOutOfRange { k, n });
    }
    let mut seen = vec![false; n];
    for &s in seeds {
        if s >= n || seen[s] {
            return Err(ClustererError::BadSeed(s));
        }
        seen[s] = true;
    }

    let square = dataset.distances().to_square();
    let sq: Vec<Vec<f64>> = square
        .iter()
        .map(|row| row.iter().map(|d| d * d).collect())
        .collect();

    let mut labels = nearest_seed_labels(&sq, seeds);
    repair_singletons(&sq, seeds, &mut labels);

    let mut sweeps = 0usize;
    let mut rejected_moves = 0usize;
    let mut hit_sweep_cap = false;
    let mut last_q = f64::INFINITY;
    loop {
        if sweeps == MAX_SWEEPS {
            hit_sweep_cap = true;
            break;
        }
        sweeps += 1;
        let mut state = SweepState::rebuild(&sq, &labels, k);
        let mut moved = false;
        for i in 0..n {
            let home = labels[i];
            let mut target = home;
            let mut best = state.affinity(i, home);
            for c in 0..k {
                if c != home {
                    let f = state.affinity(i, c);
                    if f < best {
                        best = f;
                        target = c;
                    }
                }
            }
            if target == home {
                continue;
            }
            if state.sizes[home] <= 2 || state.move_delta(i, home, target) >= 0.0 {
                rejected_moves += 1;
                continue;
            }
            state.apply_move(&sq, &mut labels, i, target);
            moved = true;
        }
        let q_now: f64 = state
            .p
            .iter()
            .zip(&state.sizes)
            .map(|(&p, &size)| p / size as f64)
            .sum();
        assert!(
            q_now <= last_q + tolerance::band(q_now, last_q),
            "refinement sweep raised the cost: {last_q} -> {q_now}"
        );
        last_q = q_now;
        if !moved {
            break;
        }
    }

    let clustering = Clustering::new(labels, k)?;
    let q = cost::kmeans_cost(dataset, &clustering)
        .expect("refined labels form a valid clustering of this dataset");
    Ok(Refinement {
        clustering,
        q,
        sweeps,
        rejected_moves,
        hit_sweep_cap,
    })
}

/// Restart count used when callers do not ask for a specific one.
pub const DEFAULT_RESTARTS: usize = 8;

/// Run seeding + refinement `restarts` times and keep the lowest-cost
/// result. Restart r draws its seeds from the stream derived from
/// `(base_seed, k, r)`, so outcomes are reproducible and independent of
/// call order. A later restart displaces the incumbent only when its
/// cost is lower by more than the relative tolerance band: restarts that
/// reach the same partition under permuted labels have mathematically
/// equal cost, and letting summation-order ulps pick the winner would
/// make the selected labeling unstable under benign rescaling.
pub fn best_of_restarts(
    dataset: &Dataset,
    k: usize,
    kind: SeparabilityKind,
    base_seed: u64,
    restarts: usize,
) -> Result<Refinement, ClustererError> {
    if restarts == 0 {
        return Err(ClustererError::NoRestarts);
    }
    let variant = seeding_for(kind);
    let mut best: Option<Refinement> = None;
    for r in 0..restarts {
        let seed = rng::derive_seed(base_seed, &[k as u64, r as u64]);
        let trace = seed_with_variant(dataset, k, seed, variant)?;
        let refined = refine_pairwise(dataset, &trace)?;
        if best
            .as_ref()
            .is_none_or(|b| tolerance::definitely_greater(b.q, refined.q))
        {
            best = Some(refined);
        }
    }
    Ok(best.expect("restarts ≥ 1 produced a result"))
}

/// Why a candidate block count was passed over during range discovery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KOutcome {
    /// 2k > n: no clustering with two points per block exists.
    SkippedTooFewPoints,
    /// The best refined clustering failed the separation test.
    NotSeparable,
    /// The residual threshold was undefined (negative slack), so the
    /// test could not pass.
    ThresholdUndefined,
    /// The clustering separated, but the given block hides a finer
    /// separation of the same kind.
    SubStructure { block: usize },
    /// The clustering separated and every block is structureless.
    Accepted,
}

/// One row of the range-discovery log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAttempt {
    pub k: usize,
    /// Cost of the best refined candidate, when one was produced.
    pub best_q: Option<f64>,
    pub outcome: KOutcome,
}

/// Result of [`discover_range`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub clustering: Clustering,
    /// Accepted block count (1 when nothing separated).
    pub k: usize,
    /// Cost of the accepted clustering.
    pub q: f64,
    pub kind: SeparabilityKind,
    /// The ceiling the search started from.
    pub k_max: usize,
    pub restarts: usize,
    /// One entry per k examined, in descending-k order.
    pub attempts: Vec<KAttempt>,
}

/// Tag mixed into the seed stream of recursive block sub-searches so they
/// never replay the parent's draws.
const SUB_SEARCH_TAG: u64 = 0x5b5b;

/// Find the largest k ≤ `k_max` with a k-block separation of `kind`
/// whose blocks hide no finer separation, searching k in descending
/// order with `restarts` seeded refinements per k.
///
/// A block of an accepted candidate is probed by running the same
/// discovery on the block alone, with the ceiling reduced to
/// `k_max − k + 1` (splitting a block further than that would push the
/// total past `k_max`). When no k passes, the one-block clustering is
/// returned with `k = 1` — the log of every attempt tells the caller
/// why.
pub fn discover_range(
    dataset: &Dataset,
    k_max: usize,
    kind: SeparabilityKind,
    rng_seed: u64,
    restarts: usize,
) -> Result<RangeResult, ClustererError> {
    if restarts == 0 {
        return Err(ClustererError::NoRestarts);
    }
    let n = dataset.n();
    let mut attempts: Vec<KAttempt> = Vec::new();
    for k in (2..=k_max).rev() {
        if 2 * k > n {
            attempts.push(KAttempt {
                k,
                best_q: None,
                outcome: KOutcome::SkippedTooFewPoints,
            });
            continue;
        }
        let best = best_of_restarts(dataset, k, kind, rng_seed, restarts)?;
        let verdict = match kind {
            SeparabilityKind::Variational => {
                separability::check_variational(dataset, &best.clustering)
            }
            SeparabilityKind::Residual => separability::check_residual(dataset, &best.clustering),
        };
        let separable = match verdict {
            Ok(report) => report.separable,
            Err(SeparabilityError::NegativeBeta(_)) => {
                attempts.push(KAttempt {
                    k,
                    best_q: Some(best.q),
                    outcome: KOutcome::ThresholdUndefined,
                });
                continue;
            }
            Err(other) => unreachable!("refined clustering is valid for this dataset: {other}"),
        };
        if !separable {
            attempts.push(KAttempt {
                k,
                best_q: Some(best.q),
                outcome: KOutcome::NotSeparable,
            });
            continue;
        }
        let mut split_block = None;
        for (idx, members) in best.clustering.blocks().into_iter().enumerate() {
            let sub = dataset
                .restrict(&members)
                .expect("block members are distinct in-range ids");
            let sub_seed = rng::derive_seed(rng_seed, &[SUB_SEARCH_TAG, k as u64, idx as u64]);
            let found = discover_range(&sub, k_max - k + 1, kind, sub_seed, restarts)?;
            if found.k > 1 {
                split_block = Some(idx);
                break;
            }
        }
        if let Some(block) = split_block {
            attempts.push(KAttempt {
                k,
                best_q: Some(best.q),
                outcome: KOutcome::SubStructure { block },
            });
            continue;
        }
        attempts.push(KAttempt {
            k,
            best_q: Some(best.q),
            outcome: KOutcome::Accepted,
        });
        // Canonical numbering (blocks by first appearance) makes the
        // returned labels a function of the partition alone, not of which
        // equal-cost restart happened to win.
        return Ok(RangeResult {
            clustering: best.clustering.canonical(),
            k,
            q: best.q,
            kind,
            k_max,
            restarts,
            attempts,
        });
    }
    let clustering = Clustering::single_block(n)?;
    let q = cost::kmeans_cost(dataset, &clustering)
        .expect("the one-block clustering is valid for any dataset");
    Ok(RangeResult {
        clustering,
        k: 1,
        q,
        kind,
        k_max,
        restarts,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerance::approx_eq;

    /// Two tight pairs, all cross distances `inter`.
    fn two_pair_dataset(inter: f64) -> Dataset {
        let rows = vec![
            vec![0.0, 1.0, inter, inter],
            vec![1.0, 0.0, inter, inter],
            vec![inter, inter, 0.0, 1.0],
            vec![inter, inter, 1.0, 0.0],
        ];
        Dataset::from_square_matrix(&rows).unwrap()
    }

    /// A pack of five mutually-at-1 points plus one point at 100 from all.
    fn pack_and_outlier() -> Dataset {
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in (i + 1)..n {
                let d = if i < 5 && l < 5 { 1.0 } else { 100.0 };
                rows[i][l] = d;
                rows[l][i] = d;
            }
        }
        Dataset::from_square_matrix(&rows).unwrap()
    }

    #[test]
    fn seeding_rejects_out_of_range_k() {
        let ds = two_pair_dataset(3.0);
        for k in [0, 1, 3] {
            assert!(matches!(
                seed_with_variant(&ds, k, 7, SeedingVariant::Classic),
                Err(ClustererError::KOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn seeding_replays_exactly_from_its_seed() {
        let ds = pack_and_outlier();
        for variant in [SeedingVariant::Classic, SeedingVariant::Residual] {
            let a = seed_with_variant(&ds, 3, 42, variant).unwrap();
            let b = seed_with_variant(&ds, 3, 42, variant).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.seeds.len(), 3);
            assert_eq!(a.step_weights.len(), 3);
            assert_eq!(a.step_weights[0], vec![1.0; 6]);
            assert_eq!(a.rng_seed, 42);
        }
    }

    #[test]
    fn residual_weights_zero_out_the_first_seed_neighborhood() {
        // Tight pairs at 1, cross distances 1.1, σ = 1. After the first
        // seed, its pair partner has weight max(0, 1² − 1²) = 0 and each
        // far point max(0, 1.1² − 1²) = 0.21 — so the second seed always
        // lands in the other pair.
        let ds = two_pair_dataset(1.1);
        let planted = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        for seed in 0..40 {
            let trace = seed_with_variant(&ds, 2, seed, SeedingVariant::Residual).unwrap();
            let first = trace.seeds[0];
            let partner = first ^ 1;
            let weights = &trace.step_weights[1];
            assert_eq!(weights[first], 0.0);
            assert_eq!(weights[partner], 0.0);
            for i in 0..4 {
                if i != first && i != partner {
                    assert!(approx_eq(weights[i], 0.21), "weight {} off", weights[i]);
                }
            }
            assert!(trace.hits_all_blocks(&planted));
            assert!(trace.uniform_fallback_steps.is_empty());
        }
    }

    #[test]
    fn residual_seeding_falls_back_to_uniform_when_all_weights_vanish() {
        // All pairwise distances equal: after the first seed every point
        // sits exactly σ away, so every residual weight is zero.
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in 0..n {
                if i != l {
                    rows[i][l] = 2.0;
                }
            }
        }
        let ds = Dataset::from_square_matrix(&rows).unwrap();
        let trace = seed_with_variant(&ds, 3, 5, SeedingVariant::Residual).unwrap();
        assert_eq!(trace.uniform_fallback_steps, vec![1, 2]);
        let mut sorted = trace.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3, "fallback must not repeat a seed");
    }

    #[test]
    fn classic_seeding_matches_the_exact_outlier_probability() {
        // Probability the outlier of `pack_and_outlier` becomes a seed at
        // k = 2: first draw uniform (1/6), otherwise the second draw picks
        // it with weight 100² against five pack weights ≤ 1² each — of
        // which one (the first seed) is zero. Exact value:
        // 1/6 + (5/6)·(10000/10004).
        let ds = pack_and_outlier();
        let exact = 1.0 / 6.0 + (5.0 / 6.0) * (10000.0 / 10004.0);
        let trials = 20_000u64;
        let mut hits = 0u64;
        for t in 0..trials {
            let seed = rng::derive_seed(777, &[t]);
            let trace = seed_with_variant(&ds, 2, seed, SeedingVariant::Classic).unwrap();
            if trace.seeds.contains(&5) {
                hits += 1;
            }
        }
        let fraction = hits as f64 / trials as f64;
        // Four standard deviations of slack around the exact value.
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(
            (fraction - exact).abs() <= 4.0 * sigma,
            "fraction {fraction} vs exact {exact} (σ = {sigma})"
        );
    }

    fn forced(seeds: &[usize]) -> SeedingTrace {
        SeedingTrace::from_seeds(seeds.to_vec(), 0)
    }

    #[test]
    fn refinement_recovers_planted_blocks_from_good_seeds() {
        let ds = two_pair_dataset(3.0);
        let planted = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let refined = refine_pairwise(&ds, &forced(&[0, 2])).unwrap();
        assert!(refined.clustering.same_partition(&planted));
        assert!(approx_eq(refined.q, 1.0));
        assert!(!refined.hit_sweep_cap);
        // Already converged: the single sweep proposes nothing.
        assert_eq!(refined.sweeps, 1);
        assert_eq!(refined.rejected_moves, 0);
    }

    #[test]
    fn refinement_rejects_bad_seed_lists() {
        let ds = pack_and_outlier();
        assert!(matches!(
            refine_pairwise(&ds, &forced(&[0, 0])),
            Err(ClustererError::BadSeed(0))
        ));
        assert!(matches!(
            refine_pairwise(&ds, &forced(&[0, 9])),
            Err(ClustererError::BadSeed(9))
        ));
        assert!(matches!(
            refine_pairwise(&ds, &forced(&[0, 1, 2, 3])),
            Err(ClustererError::KOutOfRange { k: 4, n: 6 })
        ));
    }

    #[test]
    fn refinement_isolates_planted_pairs_at_maximal_k() {
        // k = n/2: three pairs at distance 1 with huge gaps between them;
        // every block of the result must be exactly one planted pair.
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in (i + 1)..n {
                let d = if i / 2 == l / 2 { 1.0 } else { 50.0 };
                rows[i][l] = d;
                rows[l][i] = d;
            }
        }
        let ds = Dataset::from_square_matrix(&rows).unwrap();
        let planted = Clustering::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let refined = refine_pairwise(&ds, &forced(&[0, 2, 4])).unwrap();
        assert!(refined.clustering.same_partition(&planted));
        assert!(approx_eq(refined.q, 1.5));
    }

    /// Two seeds inside the same tight group: nearest-seed init leaves the
    /// second seed's block a singleton (repair) and refinement must still
    /// walk to the planted two-block structure.
    #[test]
    fn refinement_escapes_a_bad_start_via_repair_and_moves() {
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in (i + 1)..n {
                let d = if (i < 4) == (l < 4) { 1.0 } else { 10.0 };
                rows[i][l] = d;
                rows[l][i] = d;
            }
        }
        let ds = Dataset::from_square_matrix(&rows).unwrap();
        let planted = Clustering::new(vec![0, 0, 0, 0, 1, 1], 2).unwrap();
        let refined = refine_pairwise(&ds, &forced(&[0, 1])).unwrap();
        assert!(refined.clustering.same_partition(&planted));
        // Q = (6 pairs · 1)/4 + (1 pair · 1)/2.
        assert!(approx_eq(refined.q, 2.0));
    }

    #[test]
    fn refinement_never_shrinks_a_block_below_two() {
        // Even from adversarial seeds on structureless data, every block
        // of the result keeps at least two members.
        let ds = pack_and_outlier();
        for seeds in [[0usize, 5], [1, 2], [4, 5]] {
            let refined = refine_pairwise(&ds, &forced(&seeds)).unwrap();
            assert!(refined.clustering.block_sizes().into_iter().all(|s| s >= 2));
        }
    }

    #[test]
    fn hit_annotation_tracks_cumulative_block_coverage() {
        let ds = two_pair_dataset(1.1);
        let planted = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let mut trace = seed_res_kmeanspp(&ds, 2, 8).unwrap();
        assert_eq!(trace.clusters_hit, None);
        trace.annotate_hits(&planted);
        let rows = trace.clusters_hit.as_ref().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].iter().filter(|&&h| h).count(), 1);
        // Residual weights force the second seed into the other block.
        assert_eq!(rows[1], vec![true, true]);
    }

    #[test]
    fn best_of_restarts_is_deterministic_and_optimal_on_planted_data() {
        let ds = two_pair_dataset(4.0);
        let a = best_of_restarts(&ds, 2, SeparabilityKind::Variational, 11, 8).unwrap();
        let b = best_of_restarts(&ds, 2, SeparabilityKind::Variational, 11, 8).unwrap();
        assert_eq!(a, b);
        assert!(approx_eq(a.q, 1.0));
        assert!(matches!(
            best_of_restarts(&ds, 2, SeparabilityKind::Variational, 11, 0),
            Err(ClustererError::NoRestarts)
        ));
    }

    #[test]
    fn discovery_accepts_the_planted_k() {
        let ds = two_pair_dataset(4.0);
        let planted = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        for kind in [SeparabilityKind::Variational, SeparabilityKind::Residual] {
            let result = discover_range(&ds, 2, kind, 3, 4).unwrap();
            assert_eq!(result.k, 2);
            assert!(result.clustering.same_partition(&planted));
            assert_eq!(result.attempts.last().unwrap().outcome, KOutcome::Accepted);
        }
    }

    #[test]
    fn discovery_falls_through_to_one_block_on_structureless_data() {
        let ds = pack_and_outlier();
        let result = discover_range(&ds, 4, SeparabilityKind::Variational, 9, 4).unwrap();
        assert_eq!(result.k, 1);
        assert_eq!(result.clustering.k(), 1);
        assert_eq!(result.attempts.len(), 3);
        assert!(matches!(
            result.attempts[0].outcome,
            KOutcome::SkippedTooFewPoints
        ));
        for attempt in &result.attempts[1..] {
            assert_eq!(attempt.outcome, KOutcome::NotSeparable);
        }
    }

    #[test]
    fn discovery_replays_exactly_and_survives_scaling() {
        let ds = two_pair_dataset(4.0);
        let a = discover_range(&ds, 3, SeparabilityKind::Residual, 21, 6).unwrap();
        let b = discover_range(&ds, 3, SeparabilityKind::Residual, 21, 6).unwrap();
        assert_eq!(a, b);

        let scaled_rows: Vec<Vec<f64>> = ds
            .distances()
            .to_square()
            .into_iter()
            .map(|row| row.into_iter().map(|d| d * 2.0).collect())
            .collect();
        let scaled = Dataset::from_square_matrix(&scaled_rows).unwrap();
        let c = discover_range(&scaled, 3, SeparabilityKind::Residual, 21, 6).unwrap();
        assert_eq!(a.k, c.k);
        assert!(a.clustering.same_partition(&c.clustering));
    }

    #[test]
    fn discovery_reports_hidden_substructure() {
        // Two 4-blocks, one of which splits into two tight pairs with a
        // wide internal gap: k = 2 passes the plain gap test but must be
        // rejected for sub-structure, and the search then accepts k = 3.
        let n = 8;
        let mut rows = vec![vec![0.0; n]; n];
        let mut set = |i: usize, l: usize, d: f64| {
            rows[i][l] = d;
            rows[l][i] = d;
        };
        for i in 0..n {
            for l in (i + 1)..n {
                set(i, l, 1000.0);
            }
        }
        set(0, 1, 0.1);
        set(2, 3, 0.1);
        set(0, 2, 30.0);
        set(0, 3, 30.0);
        set(1, 2, 30.0);
        set(1, 3, 30.0);
        for i in 4..n {
            for l in (i + 1)..n {
                set(i, l, 0.1);
            }
        }
        let ds = Dataset::from_square_matrix(&rows).unwrap();
        let result = discover_range(&ds, 3, SeparabilityKind::Variational, 5, 6).unwrap();
        assert_eq!(result.k, 3);
        let expected = Clustering::new(vec![0, 0, 1, 1, 2, 2, 2, 2], 3).unwrap();
        assert!(result.clustering.same_partition(&expected));
    }
}
