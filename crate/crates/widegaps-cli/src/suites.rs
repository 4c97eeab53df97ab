//! Property suites behind `verify-axioms`: each trial generates data,
//! transforms it, re-runs discovery, and compares — the full pipeline the
//! rest of the CLI exposes piecewise. Failures are never fatal; they land
//! in the report as per-trial manifests precise enough to rerun one trial
//! by hand.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use widegaps::clusterers;
use widegaps::clustering::Clustering;
use widegaps::generators::{self, GeneratorConfig, IntraMode};
use widegaps::rng;
use widegaps::transforms::{self, TransformSpec};
use widegaps::SeparabilityKind;

use crate::files::RunManifest;
use crate::{CliError, SuiteArg};

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub tool_version: String,
    pub properties: Vec<PropertyReport>,
    pub ok: bool,
}

#[derive(Debug, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub passes: usize,
    pub failures: usize,
    /// One manifest per failing trial, echoing every parameter and seed
    /// that trial ran with.
    pub failing: Vec<RunManifest>,
}

impl PropertyReport {
    fn new(name: &str) -> Self {
        PropertyReport {
            name: name.to_string(),
            passes: 0,
            failures: 0,
            failing: Vec::new(),
        }
    }

    fn record(&mut self, outcome: Result<(), RunManifest>) {
        match outcome {
            Ok(()) => self.passes += 1,
            Err(manifest) => {
                self.failures += 1;
                self.failing.push(manifest);
            }
        }
    }
}

/// Seed-derivation tags, one per property, so no two properties share a
/// random stream even under `--suite all`.
const TAG_SCALE: u64 = 1;
const TAG_CONSISTENCY: u64 = 2;
const TAG_RELATIVE: u64 = 3;
const TAG_LOWER_BOUNDED: u64 = 4;
const TAG_RICHNESS: u64 = 5;

fn suite_name(suite: SuiteArg) -> &'static str {
    match suite {
        SuiteArg::Scale => "scale",
        SuiteArg::Consistency => "consistency",
        SuiteArg::Richness => "richness",
        SuiteArg::All => "all",
    }
}

pub fn run_suite(suite: SuiteArg, trials: usize, seed: u64) -> Result<SuiteReport, CliError> {
    let mut properties = Vec::new();
    if matches!(suite, SuiteArg::Scale | SuiteArg::All) {
        properties.push(scale_property(trials, seed)?);
    }
    if matches!(suite, SuiteArg::Consistency | SuiteArg::All) {
        properties.extend(consistency_properties(trials, seed)?);
    }
    if matches!(suite, SuiteArg::Richness | SuiteArg::All) {
        properties.push(richness_property(trials, seed)?);
    }
    let ok = properties.iter().all(|p| p.failures == 0);
    Ok(SuiteReport {
        suite: suite_name(suite).to_string(),
        trials,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        properties,
        ok,
    })
}

/// The suites run on fixed, known-good generator shapes; a library error
/// here is not a failed property but a broken invariant.
fn internal(err: impl std::fmt::Display) -> CliError {
    CliError::Internal(err.to_string())
}

fn failing_manifest(property: &str, config: serde_json::Value) -> RunManifest {
    RunManifest {
        command: format!("verify-axioms::{property}"),
        config,
        input_hashes: serde_json::Map::new(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn alternate_kind(trial: u64) -> SeparabilityKind {
    if trial.is_multiple_of(2) {
        SeparabilityKind::Variational
    } else {
        SeparabilityKind::Residual
    }
}

/// Discovery must not change when every distance is rescaled: the labels
/// of the α = 1 run and of each α ∈ {0.5, 2, 10} run must match exactly.
fn scale_property(trials: usize, seed: u64) -> Result<PropertyReport, CliError> {
    let mut report = PropertyReport::new("scale_invariance");
    for trial in 0..trials as u64 {
        let k = 2 + (trial % 2) as usize;
        let kind = alternate_kind(trial);
        let config = GeneratorConfig {
            k,
            sizes: vec![3; k],
            dim: 2,
            intra_spread: 0.5,
            gap_margin: 1.8,
            kind,
            rng_seed: rng::derive_seed(seed, &[TAG_SCALE, trial]),
            intra_mode: IntraMode::Gaussian,
        };
        let (ds, _) = generators::generate_range_clusterable(&config, 2).map_err(internal)?;
        let run_seed = rng::derive_seed(seed, &[TAG_SCALE, trial, 3]);
        let base = clusterers::discover_range(&ds, k + 2, kind, run_seed, 8).map_err(internal)?;

        let mut failed_alphas = Vec::new();
        for alpha in [0.5, 2.0, 10.0] {
            let scaled = transforms::apply_transform(&ds, &TransformSpec::Scale { alpha }, 0)
                .map_err(internal)?;
            let run =
                clusterers::discover_range(&scaled, k + 2, kind, run_seed, 8).map_err(internal)?;
            if run.k != base.k || run.clustering.labels() != base.clustering.labels() {
                failed_alphas.push(alpha);
            }
        }
        report.record(if failed_alphas.is_empty() {
            Ok(())
        } else {
            Err(failing_manifest(
                "scale_invariance",
                json!({
                    "trial": trial,
                    "generator": config,
                    "discovery_seed": run_seed,
                    "k_max": k + 2,
                    "restarts": 8,
                    "failed_alphas": failed_alphas,
                }),
            ))
        });
    }
    Ok(report)
}

/// Each consistency-family transform, applied relative to the planted
/// clustering, must leave rediscovery (same seed) at the same block count
/// and partition. Three properties, one per transform kind, each paired
/// with the criterion it provably preserves.
fn consistency_properties(trials: usize, seed: u64) -> Result<Vec<PropertyReport>, CliError> {
    let family = [
        (
            "consistency",
            SeparabilityKind::Variational,
            TAG_CONSISTENCY,
        ),
        (
            "relative_consistency",
            SeparabilityKind::Variational,
            TAG_RELATIVE,
        ),
        (
            "lower_bounded_relative_consistency",
            SeparabilityKind::Residual,
            TAG_LOWER_BOUNDED,
        ),
    ];
    let mut reports = Vec::new();
    for (name, kind, tag) in family {
        let mut report = PropertyReport::new(name);
        for trial in 0..trials as u64 {
            let k = 2 + (trial % 2) as usize;
            let config = GeneratorConfig {
                k,
                sizes: vec![3; k],
                dim: 2,
                intra_spread: 0.6,
                gap_margin: 1.6,
                kind,
                rng_seed: rng::derive_seed(seed, &[tag, trial]),
                intra_mode: IntraMode::Gaussian,
            };
            let (ds, planted) =
                generators::generate_range_clusterable(&config, 2).map_err(internal)?;
            let k_max = k + 2;
            let run_seed = rng::derive_seed(seed, &[tag, trial, 1]);
            let before =
                clusterers::discover_range(&ds, k_max, kind, run_seed, 12).map_err(internal)?;

            let spec = match name {
                "consistency" => TransformSpec::Consistency {
                    clustering: planted.clone(),
                    intra_factor: 0.8,
                    inter_growth: 1.5,
                },
                "relative_consistency" => TransformSpec::RelativeConsistency {
                    clustering: planted.clone(),
                    intra_factor: 0.8,
                    inter_growth: 1.5,
                },
                _ => TransformSpec::LowerBoundedRelativeConsistency {
                    clustering: planted.clone(),
                    intra_factor: 0.8,
                    inter_growth: 1.5,
                },
            };
            let transform_seed = rng::derive_seed(seed, &[tag, trial, 2]);
            let moved =
                transforms::apply_transform(&ds, &spec, transform_seed).map_err(internal)?;
            let after =
                clusterers::discover_range(&moved, k_max, kind, run_seed, 12).map_err(internal)?;

            let preserved =
                after.k == before.k && after.clustering.same_partition(&before.clustering);
            report.record(if preserved {
                Ok(())
            } else {
                Err(failing_manifest(
                    name,
                    json!({
                        "trial": trial,
                        "generator": config,
                        "discovery_seed": run_seed,
                        "transform_seed": transform_seed,
                        "k_max": k_max,
                        "restarts": 12,
                        "k_before": before.k,
                        "k_after": after.k,
                    }),
                ))
            });
        }
        reports.push(report);
    }
    Ok(reports)
}

fn random_clustering(rng: &mut impl Rng, n: usize, k: usize) -> Clustering {
    let mut labels: Vec<usize> = (0..k).flat_map(|b| [b, b]).collect();
    while labels.len() < n {
        labels.push(rng.random_range(0..k));
    }
    labels.shuffle(rng);
    Clustering::new(labels, k).expect("every block was given two members")
}

/// Every partition (blocks ≥ 2, plus the one-block case) must be
/// recoverable from its witness dataset by discovery at ceiling k.
fn richness_property(trials: usize, seed: u64) -> Result<PropertyReport, CliError> {
    let mut report = PropertyReport::new("richness_round_trip");
    for trial in 0..trials as u64 {
        let mut draw = rng::stream(seed, &[TAG_RICHNESS, trial]);
        let kind = alternate_kind(trial);
        let target = if trial == 0 {
            Clustering::single_block(8).expect("eight points form a block")
        } else {
            let n = draw.random_range(6..=14);
            let k = draw.random_range(2..=(n / 2).min(5));
            random_clustering(&mut draw, n, k)
        };
        let witness = generators::richness_witness(&target, kind).map_err(internal)?;
        let run_seed = rng::derive_seed(seed, &[TAG_RICHNESS, trial, 11]);
        let found = clusterers::discover_range(&witness, target.k(), kind, run_seed, 16)
            .map_err(internal)?;

        let recovered = found.k == target.k() && found.clustering.same_partition(&target);
        report.record(if recovered {
            Ok(())
        } else {
            Err(failing_manifest(
                "richness_round_trip",
                json!({
                    "trial": trial,
                    "target_labels": target.labels(),
                    "target_k": target.k(),
                    "kind": kind,
                    "discovery_seed": run_seed,
                    "restarts": 16,
                    "found_k": found.k,
                }),
            ))
        });
    }
    Ok(report)
}
