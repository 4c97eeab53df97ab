//! The five subcommands. Each loads its inputs, calls the library, writes
//! outputs with a manifest, and maps library errors onto exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use widegaps::clusterers::{self, KAttempt};
use widegaps::clustering::Clustering;
use widegaps::cost::CostReport;
use widegaps::dataset::Dataset;
use widegaps::generators::{self, GeneratorConfig, GeneratorError, IntraMode};
use widegaps::separability::{self, SeparabilityError, SeparabilityReport};
use widegaps::transforms::{self, TransformError, TransformSpec};
use widegaps::SeparabilityKind;

use crate::files::{self, RunManifest};
use crate::{
    resolve_seed, CheckArgs, CliError, ClusterArgs, GenerateArgs, InputArgs, TransformArgs,
    TransformKindArg, VerifyAxiomsArgs,
};

fn usage(err: impl std::fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

/// Dataset from whichever of --points/--distances was given, plus the path
/// for manifest hashing. clap guarantees exactly one is present.
fn load_dataset(input: &InputArgs) -> Result<(Dataset, PathBuf), CliError> {
    match (&input.points, &input.distances) {
        (Some(path), None) => {
            let points = files::read_points(path)?;
            let dataset = Dataset::from_points(&points).map_err(usage)?;
            Ok((dataset, path.clone()))
        }
        (None, Some(path)) => {
            let rows = files::read_square(path)?;
            let dataset = Dataset::from_square_matrix(&rows).map_err(usage)?;
            Ok((dataset, path.clone()))
        }
        _ => unreachable!("clap enforces exactly one input flag"),
    }
}

/// Labels file → clustering over exactly `n` points.
fn load_clustering(path: &Path, n: usize) -> Result<Clustering, CliError> {
    let labels = files::read_labels(path)?;
    if labels.len() != n {
        return Err(CliError::Usage(format!(
            "{}: {} labels for {} points",
            path.display(),
            labels.len(),
            n
        )));
    }
    Clustering::from_labels(labels).map_err(usage)
}

fn config_echo<T: Serialize>(value: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(value)
        .map_err(|e| CliError::Internal(format!("config echo serialization failed: {e}")))
}

fn map_generator(err: GeneratorError) -> CliError {
    match err {
        GeneratorError::ConfigInvalid(_)
        | GeneratorError::ResidualUndefined(_)
        | GeneratorError::RangePlantFailed(_) => usage(err),
        // The generator assembling an invalid dataset or clustering is a
        // library bug, not a user mistake.
        GeneratorError::Dataset(_) | GeneratorError::Clustering(_) => {
            CliError::Internal(err.to_string())
        }
    }
}

fn map_separability(err: SeparabilityError) -> CliError {
    // NegativeBeta included: it reports an impossible input, verbatim.
    usage(err)
}

pub fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let sizes = parse_sizes(&args.sizes)?;
    let seed = resolve_seed(args.seed)?;
    let config = GeneratorConfig {
        k: args.k,
        sizes,
        dim: args.dim,
        intra_spread: args.intra_spread,
        gap_margin: args.gap_margin,
        kind: args.kind.into(),
        rng_seed: seed,
        intra_mode: IntraMode::Gaussian,
    };
    let (dataset, clustering) = generators::generate_clusterable(&config).map_err(map_generator)?;

    ensure_out_dir(&args.out)?;
    let points = dataset
        .embedding()
        .ok_or_else(|| CliError::Internal("generated dataset lost its embedding".into()))?;
    files::write_points(&args.out.join("points.csv"), points)?;
    files::write_labels(&args.out.join("labels.csv"), clustering.labels())?;
    if args.emit_distances {
        files::write_square(
            &args.out.join("distances.csv"),
            &dataset.distances().to_square(),
        )?;
    }

    let mut echo = config_echo(&config)?;
    echo["emit_distances"] = serde_json::Value::Bool(args.emit_distances);
    let manifest = RunManifest::new("generate", echo, &[])?;
    files::write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "wrote {} points in {} blocks to {}",
        dataset.n(),
        config.k,
        args.out.display()
    );
    Ok(())
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|token| {
            token.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "--sizes expects comma-separated integers, got {token:?}"
                ))
            })
        })
        .collect()
}

/// The check command's report: cost statistics plus the separation verdict.
/// `level` appears only for passing range checks, `witness_pair` only for
/// failures.
#[derive(Debug, Serialize)]
struct CheckReport {
    q: f64,
    sigma: f64,
    beta: f64,
    threshold: f64,
    min_inter: f64,
    separable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_pair: Option<(usize, usize)>,
}

pub fn check(args: CheckArgs) -> Result<(), CliError> {
    let (dataset, input_path) = load_dataset(&args.input)?;
    let clustering = load_clustering(&args.labels, dataset.n())?;
    let kind: SeparabilityKind = args.kind.into();

    let verdict: SeparabilityReport = match args.range_k {
        None => match kind {
            SeparabilityKind::Variational => separability::check_variational(&dataset, &clustering),
            SeparabilityKind::Residual => separability::check_residual(&dataset, &clustering),
        },
        Some(depth) => separability::check_range(&dataset, &clustering, kind, depth),
    }
    .map_err(map_separability)?;
    let cost = CostReport::compute(&dataset, &clustering).map_err(usage)?;

    let report = CheckReport {
        q: cost.q,
        sigma: cost.sigma,
        beta: cost.beta,
        threshold: verdict.threshold,
        min_inter: verdict.min_inter,
        separable: verdict.separable,
        level: verdict.level,
        witness_pair: verdict.witness_pair,
    };
    let line = serde_json::to_string(&report)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    println!("{line}");

    if let Some(out) = &args.out {
        files::write_json(out, &report)?;
        let mut echo = serde_json::json!({
            "input": input_path.display().to_string(),
            "labels": args.labels.display().to_string(),
            "kind": kind,
        });
        if let Some(depth) = args.range_k {
            echo["range_k"] = depth.into();
        }
        let manifest = RunManifest::new("check", echo, &[&input_path, &args.labels])?;
        files::write_json(&manifest_path_beside(out), &manifest)?;
    }
    Ok(())
}

/// `report.json` → `report.manifest.json`, keeping the directory.
fn manifest_path_beside(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

#[derive(Debug, Serialize)]
struct ClusterReport {
    k: usize,
    /// One row per candidate block count examined, descending.
    per_k_log: Vec<KAttempt>,
    q: f64,
    manifest: RunManifest,
}

pub fn cluster(args: ClusterArgs) -> Result<(), CliError> {
    let (dataset, input_path) = load_dataset(&args.input)?;
    let seed = resolve_seed(args.seed)?;
    let kind: SeparabilityKind = args.kind.into();
    let result =
        clusterers::discover_range(&dataset, args.kx, kind, seed, args.restarts).map_err(usage)?;

    ensure_out_dir(&args.out)?;
    files::write_labels(&args.out.join("labels.csv"), result.clustering.labels())?;
    let manifest = RunManifest::new(
        "cluster",
        serde_json::json!({
            "input": input_path.display().to_string(),
            "kx": args.kx,
            "kind": kind,
            "seed": seed,
            "restarts": args.restarts,
        }),
        &[&input_path],
    )?;
    let report = ClusterReport {
        k: result.k,
        per_k_log: result.attempts,
        q: result.q,
        manifest,
    };
    files::write_json(&args.out.join("report.json"), &report)?;

    println!(
        "k = {}, q = {:.6e}; outputs in {}",
        result.k,
        result.q,
        args.out.display()
    );
    Ok(())
}

/// The transform kind's name as it appears on the command line.
fn kind_name(kind: TransformKindArg) -> &'static str {
    match kind {
        TransformKindArg::Scale => "scale",
        TransformKindArg::Consistency => "consistency",
        TransformKindArg::RelativeConsistency => "relative_consistency",
        TransformKindArg::LowerBoundedRelativeConsistency => "lower_bounded_relative_consistency",
        TransformKindArg::DeltaShift => "delta_shift",
    }
}

/// Flags must match the kind exactly: missing parameters are unusable and
/// stray ones are almost certainly a typo for a different kind.
fn build_spec(args: &TransformArgs, n: usize) -> Result<TransformSpec, CliError> {
    let name = kind_name(args.kind);
    let need = |flag: Option<f64>, flag_name: &str| {
        flag.ok_or_else(|| CliError::Usage(format!("kind {name} requires --{flag_name}")))
    };
    let reject_stray = |present: bool, flag_name: &str| {
        if present {
            Err(CliError::Usage(format!(
                "--{flag_name} does not apply to kind {name}"
            )))
        } else {
            Ok(())
        }
    };
    let clustering_for = |labels: &Option<PathBuf>| -> Result<Clustering, CliError> {
        let path = labels
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("kind {name} requires --labels")))?;
        load_clustering(path, n)
    };

    match args.kind {
        TransformKindArg::Scale => {
            reject_stray(args.delta.is_some(), "delta")?;
            reject_stray(args.intra_factor.is_some(), "intra-factor")?;
            reject_stray(args.inter_growth.is_some(), "inter-growth")?;
            reject_stray(args.labels.is_some(), "labels")?;
            Ok(TransformSpec::Scale {
                alpha: need(args.alpha, "alpha")?,
            })
        }
        TransformKindArg::DeltaShift => {
            reject_stray(args.alpha.is_some(), "alpha")?;
            reject_stray(args.intra_factor.is_some(), "intra-factor")?;
            reject_stray(args.inter_growth.is_some(), "inter-growth")?;
            reject_stray(args.labels.is_some(), "labels")?;
            Ok(TransformSpec::DeltaShift {
                delta: need(args.delta, "delta")?,
            })
        }
        TransformKindArg::Consistency
        | TransformKindArg::RelativeConsistency
        | TransformKindArg::LowerBoundedRelativeConsistency => {
            reject_stray(args.alpha.is_some(), "alpha")?;
            reject_stray(args.delta.is_some(), "delta")?;
            let clustering = clustering_for(&args.labels)?;
            let intra_factor = need(args.intra_factor, "intra-factor")?;
            let inter_growth = need(args.inter_growth, "inter-growth")?;
            Ok(match args.kind {
                TransformKindArg::Consistency => TransformSpec::Consistency {
                    clustering,
                    intra_factor,
                    inter_growth,
                },
                TransformKindArg::RelativeConsistency => TransformSpec::RelativeConsistency {
                    clustering,
                    intra_factor,
                    inter_growth,
                },
                _ => TransformSpec::LowerBoundedRelativeConsistency {
                    clustering,
                    intra_factor,
                    inter_growth,
                },
            })
        }
    }
}

fn map_transform(err: TransformError) -> CliError {
    match err {
        TransformError::InvalidSpec(_) | TransformError::InvalidClustering(_) => usage(err),
        // Same-length inputs can't mismatch and a transform of a valid
        // matrix stays valid; reaching these means the library broke.
        TransformError::SizeMismatch { .. } | TransformError::InvalidResult(_) => {
            CliError::Internal(err.to_string())
        }
    }
}

pub fn transform(args: TransformArgs) -> Result<(), CliError> {
    let rows = files::read_square(&args.distances)?;
    let dataset = Dataset::from_square_matrix(&rows).map_err(usage)?;
    let spec = build_spec(&args, dataset.n())?;
    // Only the consistency kinds draw random factors; the deterministic
    // kinds run without requiring a seed.
    let seed = if spec.clustering().is_some() {
        resolve_seed(args.seed)?
    } else {
        args.seed.unwrap_or(0)
    };

    let after = transforms::apply_transform(&dataset, &spec, seed).map_err(map_transform)?;
    let verification =
        transforms::verify_transform(&dataset, &after, &spec).map_err(map_transform)?;
    if !verification.ok {
        let first = verification
            .violations
            .first()
            .map(|v| format!("{} at {:?}: {}", v.clause, v.ids, v.detail))
            .unwrap_or_default();
        return Err(CliError::Internal(format!(
            "transform failed its own verification with {} violation(s); first: {first}",
            verification.violations.len()
        )));
    }

    ensure_out_dir(&args.out)?;
    files::write_square(
        &args.out.join("distances.csv"),
        &after.distances().to_square(),
    )?;
    files::write_json(&args.out.join("verification.json"), &verification)?;

    let mut echo = config_echo(&spec)?;
    echo["rng_seed"] = seed.into();
    echo["distances"] = args.distances.display().to_string().into();
    if let Some(labels) = &args.labels {
        echo["labels_file"] = labels.display().to_string().into();
    }
    let mut inputs: Vec<&Path> = vec![&args.distances];
    if let Some(labels) = &args.labels {
        inputs.push(labels);
    }
    let manifest = RunManifest::new("transform", echo, &inputs)?;
    files::write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "transformed {} points; outputs in {}",
        dataset.n(),
        args.out.display()
    );
    Ok(())
}

pub fn verify_axioms(args: VerifyAxiomsArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let seed = resolve_seed(args.seed)?;
    let report = crate::suites::run_suite(args.suite, args.trials, seed)?;

    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    println!("{text}");
    if let Some(out) = &args.out {
        files::write_json(out, &report)?;
    }

    if report.ok {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .properties
            .iter()
            .filter(|p| p.failures > 0)
            .map(|p| p.name.as_str())
            .collect();
        Err(CliError::SuiteFailed(format!(
            "property suite failed: {}",
            failed.join(", ")
        )))
    }
}
