//! Construction of datasets with planted, provably optimal clusterings.
//!
//! The trick that makes planting possible: the clustering cost sums
//! within-block distances only, so once a set of blocks is sampled around
//! the origin, the cost, σ, and the separation threshold are already
//! fixed — translating whole blocks changes none of them. The generator
//! therefore samples block shapes first, computes the threshold the gaps
//! must clear, and then parks the blocks on a scaled coordinate simplex
//! far enough apart that every between-block distance exceeds the
//! threshold by the configured margin. The planted clustering passes its
//! separability check by construction, which also certifies it as the
//! global cost minimizer for its k.
//!
//! [`richness_witness`] runs the same construction against an arbitrary
//! target partition, producing a dataset on which range discovery returns
//! exactly that partition — the constructive proof that every partition
//! is reachable.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{Clustering, ClusteringError};
use crate::dataset::{Dataset, DatasetError};
use crate::rng;
use crate::separability::{self, SeparabilityKind};

/// How within-block structure is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraMode {
    /// Isotropic Gaussian offsets with per-coordinate scale `intra_spread`.
    #[default]
    Gaussian,
    /// Every block is exactly two points at distance `intra_spread` —
    /// block statistics become hand-computable.
    FixedPair,
}

/// Parameters for the planted-clustering generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Number of planted blocks (≥ 2).
    pub k: usize,
    /// One size per block, each ≥ 2.
    pub sizes: Vec<usize>,
    /// Embedding dimension for the within-block offsets; raised
    /// internally when the block centers need more room.
    pub dim: usize,
    /// Within-block dispersion scale.
    pub intra_spread: f64,
    /// How far beyond the separation threshold the gaps must reach (> 1).
    pub gap_margin: f64,
    /// Which separability criterion the output must pass.
    pub kind: SeparabilityKind,
    pub rng_seed: u64,
    pub intra_mode: IntraMode,
}

impl GeneratorConfig {
    fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |msg: String| Err(GeneratorError::ConfigInvalid(msg));
        if self.k < 2 {
            return bad(format!(
                "need at least two blocks to separate, got k = {}",
                self.k
            ));
        }
        if self.sizes.len() != self.k {
            return bad(format!(
                "{} sizes given for k = {}",
                self.sizes.len(),
                self.k
            ));
        }
        if let Some(s) = self.sizes.iter().find(|&&s| s < 2) {
            return bad(format!(
                "every block needs at least 2 points, got a block of {s}"
            ));
        }
        if !(self.intra_spread.is_finite() && self.intra_spread > 0.0) {
            return bad(format!(
                "intra spread must be positive, got {}",
                self.intra_spread
            ));
        }
        if !(self.gap_margin.is_finite() && self.gap_margin > 1.0) {
            return bad(format!("gap margin must exceed 1, got {}", self.gap_margin));
        }
        if self.dim == 0 {
            return bad("embedding dimension must be at least 1".into());
        }
        if self.intra_mode == IntraMode::FixedPair && self.sizes.iter().any(|&s| s != 2) {
            return bad("fixed-pair mode requires every block size to be exactly 2".into());
        }
        Ok(())
    }
}

/// Failures of dataset generation.
#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator configuration: {0}")]
    ConfigInvalid(String),
    #[error("residual slack stayed negative through {0} sampling attempts")]
    ResidualUndefined(usize),
    #[error("no attempt out of {0} produced blocks free of finer separations")]
    RangePlantFailed(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

/// Resampling cap shared by all generators.
pub const MAX_ATTEMPTS: usize = 100;

/// Why one sampling attempt was thrown away.
enum Retry {
    /// Two sampled points coincided (measure-zero, but checked).
    Collision,
    /// β < 0 for the sampled structure under the residual kind.
    NegativeSlack,
    /// The assembled gaps did not clear the threshold decisively — only
    /// possible when gap_margin sits within rounding of 1.
    MarginTooTight,
    /// A block admitted a finer separation (range generation only).
    SubStructure,
}

/// One sampling attempt: block offsets around the origin, then placement.
/// `members[j]` lists the dataset point ids of block j and fully
/// determines the planted labels.
fn sample_attempt(
    config: &GeneratorConfig,
    members: &[Vec<usize>],
    attempt: u64,
) -> Result<Result<(Dataset, Clustering), Retry>, GeneratorError> {
    let n: usize = config.sizes.iter().sum();
    let mut stream = rng::stream(config.rng_seed, &[attempt]);

    // Within-block offsets, sampled around the origin.
    let offsets: Vec<Vec<Vec<f64>>> = match config.intra_mode {
        IntraMode::Gaussian => {
            let normal = Normal::new(0.0, config.intra_spread)
                .expect("validated spread is positive and finite");
            config
                .sizes
                .iter()
                .map(|&s| {
                    (0..s)
                        .map(|_| {
                            (0..config.dim)
                                .map(|_| normal.sample(&mut stream))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        }
        IntraMode::FixedPair => {
            let half = config.intra_spread / 2.0;
            config
                .sizes
                .iter()
                .map(|_| {
                    vec![
                        std::iter::once(-half)
                            .chain(std::iter::repeat(0.0))
                            .take(config.dim)
                            .collect(),
                        std::iter::once(half)
                            .chain(std::iter::repeat(0.0))
                            .take(config.dim)
                            .collect(),
                    ]
                })
                .collect()
        }
    };

    // Block statistics before placement. Translation adds no terms to the
    // cost, so these already determine the separation threshold.
    let mut q = 0.0;
    let mut sigma = f64::INFINITY;
    let mut max_radius: f64 = 0.0;
    for block in &offsets {
        let mut pair_sum = 0.0;
        for (a, x) in block.iter().enumerate() {
            max_radius = max_radius.max(x.iter().map(|c| c * c).sum::<f64>().sqrt());
            for y in &block[a + 1..] {
                let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
                pair_sum += d2;
                sigma = sigma.min(d2.sqrt());
            }
        }
        q += pair_sum / block.len() as f64;
    }
    let threshold = match config.kind {
        SeparabilityKind::Variational => (2.0 * q).sqrt(),
        SeparabilityKind::Residual => {
            let beta = 2.0 * (q - (n - config.k - 1) as f64 * sigma * sigma / 2.0);
            if beta < 0.0 {
                return Ok(Err(Retry::NegativeSlack));
            }
            beta.sqrt()
        }
    };

    // Centers on a scaled coordinate simplex: block j sits on axis j at
    // L/√2, so centers are mutually L apart and every between-block pair
    // is at least L − 2·max_radius = gap_margin · threshold apart.
    let center_gap = config.gap_margin * threshold + 2.0 * max_radius;
    let axis_coord = center_gap / 2.0f64.sqrt();
    let dim_eff = config.dim.max(config.k);
    let mut points = vec![Vec::new(); n];
    let mut labels = vec![0usize; n];
    for (j, block_members) in members.iter().enumerate() {
        for (&id, offset) in block_members.iter().zip(&offsets[j]) {
            let mut coords = vec![0.0; dim_eff];
            coords[..config.dim].copy_from_slice(offset);
            coords[j] += axis_coord;
            points[id] = coords;
            labels[id] = j;
        }
    }

    let dataset = match Dataset::from_points(&points) {
        Ok(ds) => ds,
        Err(DatasetError::DuplicatePoint(_, _)) => return Ok(Err(Retry::Collision)),
        Err(e) => return Err(e.into()),
    };
    let clustering = Clustering::new(labels, config.k)?;
    let report = match config.kind {
        SeparabilityKind::Variational => separability::check_variational(&dataset, &clustering),
        SeparabilityKind::Residual => separability::check_residual(&dataset, &clustering),
    }
    .expect("planted clustering is valid and k ≥ 2");
    if !report.separable {
        return Ok(Err(Retry::MarginTooTight));
    }
    Ok(Ok((dataset, clustering)))
}

fn consecutive_members(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut members = Vec::with_capacity(sizes.len());
    let mut next = 0;
    for &s in sizes {
        members.push((next..next + s).collect());
        next += s;
    }
    members
}

fn retry_error(reason: Retry) -> GeneratorError {
    match reason {
        Retry::NegativeSlack => GeneratorError::ResidualUndefined(MAX_ATTEMPTS),
        Retry::SubStructure => GeneratorError::RangePlantFailed(MAX_ATTEMPTS),
        Retry::Collision | Retry::MarginTooTight => GeneratorError::ConfigInvalid(format!(
            "no usable sample in {MAX_ATTEMPTS} attempts; \
             the configuration forces collisions or undecidable gaps"
        )),
    }
}

/// Generate a dataset with a planted clustering that provably passes the
/// configured separability check — and is therefore the globally optimal
/// clustering for its k. Point ids are grouped by block in order. The
/// embedding is kept on the result.
pub fn generate_clusterable(
    config: &GeneratorConfig,
) -> Result<(Dataset, Clustering), GeneratorError> {
    config.validate()?;
    let members = consecutive_members(&config.sizes);
    let mut last = Retry::Collision;
    for attempt in 0..MAX_ATTEMPTS {
        match sample_attempt(config, &members, attempt as u64)? {
            Ok(pair) => return Ok(pair),
            Err(reason) => last = reason,
        }
    }
    Err(retry_error(last))
}

/// As [`generate_clusterable`], but additionally certify that no planted
/// block admits a k′-block separation of the configured kind for any
/// k′ in `2..=depth+1` — the planted structure is the finest one present.
/// Attempts whose blocks carry accidental sub-structure are resampled.
pub fn generate_range_clusterable(
    config: &GeneratorConfig,
    depth: usize,
) -> Result<(Dataset, Clustering), GeneratorError> {
    config.validate()?;
    if depth < 2 {
        return Err(GeneratorError::ConfigInvalid(format!(
            "range generation needs a search depth ≥ 2, got {depth}"
        )));
    }
    let members = consecutive_members(&config.sizes);
    let mut last = Retry::Collision;
    'attempts: for attempt in 0..MAX_ATTEMPTS {
        let (dataset, clustering) = match sample_attempt(config, &members, attempt as u64)? {
            Ok(pair) => pair,
            Err(reason) => {
                last = reason;
                continue;
            }
        };
        for block_members in clustering.blocks() {
            if block_members.len() < 4 {
                continue;
            }
            let sub = dataset
                .restrict(&block_members)
                .expect("block members are distinct in-range ids");
            for sub_k in 2..=(depth + 1) {
                if separability::find_separation(&sub, sub_k, config.kind).is_some() {
                    last = Retry::SubStructure;
                    continue 'attempts;
                }
            }
        }
        return Ok((dataset, clustering));
    }
    Err(retry_error(last))
}

/// Base seed for witness construction, mixed with the target's labels so
/// distinct targets get distinct geometry.
const WITNESS_SEED: u64 = 0x71c4e55;

/// Construct a dataset on which range discovery, searching up to the
/// target's own block count, returns exactly the target partition.
///
/// For a multi-block target this is a wide-margin planted instance whose
/// block memberships follow the target's labels; discovery then accepts
/// the planted k immediately (the sub-search ceiling is exhausted at the
/// top level, so nothing finer can be reported). A one-block target gets
/// a structureless Gaussian blob.
pub fn richness_witness(
    target: &Clustering,
    kind: SeparabilityKind,
) -> Result<Dataset, GeneratorError> {
    let n = target.n();
    let tags: Vec<u64> = target.labels().iter().map(|&l| l as u64).collect();
    let seed = rng::derive_seed(WITNESS_SEED, &tags);
    if target.k() == 1 {
        // Any tight blob witnesses the no-structure answer.
        let normal = Normal::new(0.0, 1.0).expect("unit scale is valid");
        for attempt in 0..MAX_ATTEMPTS {
            let mut stream = rng::stream(seed, &[attempt as u64]);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| normal.sample(&mut stream)).collect())
                .collect();
            match Dataset::from_points(&points) {
                Ok(ds) => return Ok(ds),
                Err(DatasetError::DuplicatePoint(_, _)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        return Err(retry_error(Retry::Collision));
    }

    let members = target.blocks();
    let config = GeneratorConfig {
        k: target.k(),
        sizes: members.iter().map(|m| m.len()).collect(),
        dim: 3,
        intra_spread: 1.0,
        // Comfortably above the threshold so that every seeding that hits
        // all blocks refines straight to the target.
        gap_margin: 2.5,
        kind,
        rng_seed: seed,
        intra_mode: IntraMode::Gaussian,
    };
    config.validate()?;
    let mut last = Retry::Collision;
    for attempt in 0..MAX_ATTEMPTS {
        match sample_attempt(&config, &members, attempt as u64)? {
            Ok((dataset, clustering)) => {
                debug_assert!(clustering.same_partition(target));
                return Ok(dataset);
            }
            Err(reason) => last = reason,
        }
    }
    Err(retry_error(last))
}
