//! Ground truth by brute force, plus seeding-probability baselines.
//!
//! Nothing here shares code with the clustering heuristics: the exhaustive
//! optimum enumerates every admissible partition outright, and the
//! hit-probability estimator just replays the seeders over fresh derived
//! seeds and counts. That independence is the point — these are the
//! routines the rest of the crate is judged against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusterers::{self, SeedingVariant};
use crate::clustering::{Clustering, ClusteringError};
use crate::dataset::Dataset;
use crate::rng;
use crate::tolerance;

/// Exhaustive search is capped here; above it the scan count explodes.
pub const MAX_EXHAUSTIVE_N: usize = 14;

/// Minimum trial count for hit-probability estimation.
pub const MIN_TRIALS: u64 = 1000;

/// Two-sided 99% normal quantile (Φ⁻¹(0.995)), for Wilson intervals.
const Z_99: f64 = 2.575_829_303_548_900_4;

/// Failures of the oracle routines.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exhaustive search is capped at {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("k = {k} is out of range for n = {n} (need 1 ≤ k ≤ n/2)")]
    KOutOfRange { k: usize, n: usize },
    #[error(transparent)]
    InvalidClustering(#[from] ClusteringError),
    #[error("hit-probability estimation needs at least {min} trials, got {got}")]
    TooFewTrials { got: u64, min: u64 },
    #[error("bound arguments out of range: need m ≥ 1 and k ≥ 1, got m = {m}, k = {k}")]
    BadBoundArgs { m: usize, k: usize },
}

/// Result of an exhaustive cost scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    /// Smallest cost over all admissible partitions.
    pub best_q: f64,
    /// The first partition (in enumeration order) achieving `best_q`.
    pub best_clustering: Clustering,
    /// How many partitions the scan visited.
    pub num_partitions_scanned: u64,
    /// Other partitions whose cost lies within relative tolerance of
    /// `best_q` (the best itself excluded).
    pub ties: Vec<Clustering>,
}

/// Visit every partition of `0..n` into exactly `k` blocks of size ≥ 2,
/// in restricted-growth-string order (block labels appear in first-use
/// order, so the visit order is lexicographic on label vectors).
pub fn for_each_partition<F: FnMut(&[usize])>(n: usize, k: usize, mut visit: F) {
    if n < 2 * k || k == 0 {
        return;
    }
    let mut labels = vec![0usize; n];
    let mut sizes = vec![0usize; k];
    fn recurse<F: FnMut(&[usize])>(
        pos: usize,
        open: usize,
        n: usize,
        k: usize,
        labels: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        visit: &mut F,
    ) {
        // Feasibility: every deficient block still needs a point, every
        // unopened block needs two. At a leaf this only passes when all k
        // blocks exist with size ≥ 2.
        let deficit: usize = sizes[..open]
            .iter()
            .map(|&s| 2usize.saturating_sub(s))
            .sum();
        let required = deficit + 2 * (k - open);
        if n - pos < required {
            return;
        }
        if pos == n {
            visit(labels);
            return;
        }
        for block in 0..open.min(k) {
            labels[pos] = block;
            sizes[block] += 1;
            recurse(pos + 1, open, n, k, labels, sizes, visit);
            sizes[block] -= 1;
        }
        if open < k {
            labels[pos] = open;
            sizes[open] += 1;
            recurse(pos + 1, open + 1, n, k, labels, sizes, visit);
            sizes[open] -= 1;
        }
    }
    recurse(0, 0, n, k, &mut labels, &mut sizes, &mut visit);
}

/// Count the partitions [`for_each_partition`] visits, by recurrence
/// rather than enumeration: a point either joins a block that stays ≥ 2
/// without it, or is paired with one of the remaining points in a fresh
/// block. Used to cross-check the enumerator.
pub fn admissible_partition_count(n: usize, k: usize) -> u64 {
    fn count(n: usize, k: usize, memo: &mut Vec<Vec<Option<u64>>>) -> u64 {
        if k == 0 {
            return u64::from(n == 0);
        }
        if n < 2 * k {
            return 0;
        }
        if let Some(v) = memo[n][k] {
            return v;
        }
        let v = k as u64 * count(n - 1, k, memo) + (n - 1) as u64 * count(n - 2, k - 1, memo);
        memo[n][k] = Some(v);
        v
    }
    let mut memo = vec![vec![None; k + 1]; n + 1];
    count(n, k, &mut memo)
}

/// Scan every admissible k-block partition and report the cost minimizer.
///
/// The reported minimizer is the lowest-cost partition, first in
/// enumeration order among exact-cost ties; `ties` collects the other
/// partitions within relative tolerance of it.
pub fn exhaustive_optimum(dataset: &Dataset, k: usize) -> Result<OracleResult, OracleError> {
    let n = dataset.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(OracleError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    if k == 0 || 2 * k > n {
        return Err(OracleError::KOutOfRange { k, n });
    }

    // Squared distances up front; the scan visits each pair many times.
    let mut sq = vec![vec![0.0f64; n]; n];
    for (i, l, d) in dataset.distances().iter_pairs() {
        sq[i][l] = d * d;
        sq[l][i] = d * d;
    }

    let mut best_q = f64::INFINITY;
    let mut best_labels: Vec<usize> = Vec::new();
    let mut near: Vec<(f64, Vec<usize>)> = Vec::new(); // within-tolerance shadow list
    let mut scanned = 0u64;

    for_each_partition(n, k, |labels| {
        scanned += 1;
        let mut pair_sums = vec![0.0f64; k];
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            sizes[labels[i]] += 1;
            for l in (i + 1)..n {
                if labels[i] == labels[l] {
                    pair_sums[labels[i]] += sq[i][l];
                }
            }
        }
        let q: f64 = pair_sums
            .iter()
            .zip(&sizes)
            .map(|(&s, &size)| s / size as f64)
            .sum();

        if q < best_q {
            if best_labels.is_empty() || !tolerance::approx_eq(q, best_q) {
                near.retain(|(tq, _)| tolerance::approx_eq(*tq, q));
            } else {
                near.push((best_q, std::mem::take(&mut best_labels)));
                near.retain(|(tq, _)| tolerance::approx_eq(*tq, q));
            }
            best_q = q;
            best_labels = labels.to_vec();
        } else if tolerance::approx_eq(q, best_q) {
            near.push((q, labels.to_vec()));
        }
    });

    debug_assert!(
        !best_labels.is_empty(),
        "n ≥ 2k guarantees at least one partition"
    );
    let best_clustering = Clustering::new(best_labels, k)?;
    let ties = near
        .into_iter()
        .map(|(_, labels)| Clustering::new(labels, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OracleResult {
        best_q,
        best_clustering,
        num_partitions_scanned: scanned,
        ties,
    })
}

/// Monte Carlo estimate of the probability that one seeding round places
/// its k seeds in k distinct blocks of `planted`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HitEstimate {
    pub successes: u64,
    pub trials: u64,
    /// Empirical success fraction.
    pub fraction: f64,
    /// Lower end of the 99% Wilson score interval.
    pub wilson_low: f64,
    /// Upper end of the 99% Wilson score interval.
    pub wilson_high: f64,
    /// Analytic lower bound from [`all_hit_lower_bound`] at m = the
    /// smallest planted block size.
    pub analytic_bound: f64,
}

/// 99% Wilson score interval for `successes` out of `trials`.
pub fn wilson_99(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_99 * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Run `trials` independent seedings (streams derived per trial from
/// `rng_seed`) and count the rounds whose seeds hit every planted block.
pub fn montecarlo_hit_probability(
    dataset: &Dataset,
    planted: &Clustering,
    variant: SeedingVariant,
    trials: u64,
    rng_seed: u64,
) -> Result<HitEstimate, OracleError> {
    planted.ensure_covers(dataset.n())?;
    if trials < MIN_TRIALS {
        return Err(OracleError::TooFewTrials {
            got: trials,
            min: MIN_TRIALS,
        });
    }
    let k = planted.k();
    let mut successes = 0u64;
    for trial in 0..trials {
        let seed = rng::derive_seed(rng_seed, &[trial]);
        if k == 1 {
            // One seed, one block: every draw lands inside it.
            successes += 1;
            continue;
        }
        let trace = clusterers::seed_with_variant(dataset, k, seed, variant)
            .expect("planted blocks of size ≥ 2 keep k within seeding range");
        if trace.hits_all_blocks(planted) {
            successes += 1;
        }
    }
    let (wilson_low, wilson_high) = wilson_99(successes, trials);
    let m = planted.block_sizes().into_iter().min().unwrap_or(0);
    Ok(HitEstimate {
        successes,
        trials,
        fraction: successes as f64 / trials as f64,
        wilson_low,
        wilson_high,
        analytic_bound: all_hit_lower_bound(m, k)?,
    })
}

/// Analytic lower bound on the probability that k seeds drawn by either
/// seeding variant land in k distinct blocks of a separable clustering
/// whose smallest block has m points:
/// `Π_{i=1..k−1} (1 − 1/(m·(k−i)+1))`.
///
/// `m = 1` is accepted for analysis even though datasets never produce it
/// (blocks have at least two members).
pub fn all_hit_lower_bound(m: usize, k: usize) -> Result<f64, OracleError> {
    if m < 1 || k < 1 {
        return Err(OracleError::BadBoundArgs { m, k });
    }
    let mut product = 1.0f64;
    for i in 1..k {
        product *= 1.0 - 1.0 / ((m * (k - i)) as f64 + 1.0);
    }
    Ok(product)
}
