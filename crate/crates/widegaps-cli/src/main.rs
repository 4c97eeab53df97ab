//! `widegaps` — reproducible generate → transform → cluster → verify
//! pipelines over the widegaps library.
//!
//! Every command that samples takes `--seed` (with the `WIDE_GAPS_SEED`
//! environment variable as fallback) and emits a manifest echoing the full
//! configuration, so identical invocations produce byte-identical outputs.
//! Exit codes: 0 success, 1 validation or configuration error, 2 property
//! suite failure, 3 internal invariant breach.

mod commands;
mod files;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use widegaps::SeparabilityKind;

/// Command failures, sorted by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, impossible configs. Exit 1.
    #[error("{0}")]
    Usage(String),
    /// A property suite ran to completion and found failures. Exit 2.
    #[error("{0}")]
    SuiteFailed(String),
    /// A should-never-happen breach: a freshly applied transform failing
    /// its own verification, or a library invariant giving way. Exit 3.
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::SuiteFailed(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "widegaps",
    version,
    about = "Generate, check, cluster, and transform datasets with provably wide gaps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset with a planted, certified clustering
    Generate(GenerateArgs),
    /// Check a labeled dataset against a separation criterion
    Check(CheckArgs),
    /// Discover the largest separable block count up to a ceiling
    Cluster(ClusterArgs),
    /// Apply a distance transform and verify it against its own contract
    Transform(TransformArgs),
    /// Run end-to-end axiom property suites
    VerifyAxioms(VerifyAxiomsArgs),
}

/// `--kind` values shared by generate, check, and cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Variational,
    Residual,
}

impl From<KindArg> for SeparabilityKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Variational => SeparabilityKind::Variational,
            KindArg::Residual => SeparabilityKind::Residual,
        }
    }
}

/// `--kind` values of the transform command. Names match the JSON tags of
/// the serialized transform specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKindArg {
    Scale,
    Consistency,
    #[value(name = "relative_consistency")]
    RelativeConsistency,
    #[value(name = "lower_bounded_relative_consistency")]
    LowerBoundedRelativeConsistency,
    #[value(name = "delta_shift")]
    DeltaShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Scale,
    Consistency,
    Richness,
    All,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of planted blocks
    #[arg(long)]
    k: usize,
    /// Comma-separated block sizes, one per block (each ≥ 2)
    #[arg(long)]
    sizes: String,
    /// Embedding dimension for the within-block offsets
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Separation criterion the output must pass
    #[arg(long, value_enum)]
    kind: KindArg,
    /// How far beyond the separation threshold the gaps reach (> 1)
    #[arg(long, default_value_t = 2.0)]
    gap_margin: f64,
    /// Within-block dispersion scale
    #[arg(long, default_value_t = 1.0)]
    intra_spread: f64,
    /// Rng seed (falls back to WIDE_GAPS_SEED)
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving points.csv, labels.csv, distances.csv, manifest.json
    #[arg(long)]
    out: PathBuf,
    /// Whether to write the distances.csv square matrix
    #[arg(
        long,
        default_value_t = true,
        num_args = 0..=1,
        default_missing_value = "true",
        action = clap::ArgAction::Set
    )]
    emit_distances: bool,
}

#[derive(Debug, Args)]
#[group(id = "input", required = true, multiple = false)]
struct InputArgs {
    /// Points CSV (header x0,x1,..., one row per point)
    #[arg(long, group = "input")]
    points: Option<PathBuf>,
    /// Distances CSV (square matrix, no header)
    #[arg(long, group = "input")]
    distances: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Labels CSV (one block id per row)
    #[arg(long)]
    labels: PathBuf,
    /// Separation criterion to test
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Also require every block to hide no k′-separation for k′ = 2..=K+1
    #[arg(long = "range-K")]
    range_k: Option<usize>,
    /// Write the report here as well as to stdout (manifest sits beside it)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Ceiling on the block count to search downward from
    #[arg(long)]
    kx: usize,
    /// Separation criterion accepted clusterings must pass
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Rng seed (falls back to WIDE_GAPS_SEED)
    #[arg(long)]
    seed: Option<u64>,
    /// Seeded refinement restarts per candidate block count
    #[arg(long, default_value_t = widegaps::clusterers::DEFAULT_RESTARTS)]
    restarts: usize,
    /// Directory receiving labels.csv and report.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Distances CSV to transform
    #[arg(long)]
    distances: PathBuf,
    /// Labels CSV (required by the consistency kinds)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Transform kind
    #[arg(long, value_enum)]
    kind: TransformKindArg,
    /// Scale factor (kind scale)
    #[arg(long)]
    alpha: Option<f64>,
    /// Squared-distance shift (kind delta_shift)
    #[arg(long)]
    delta: Option<f64>,
    /// Lower bound of the within-block shrink factors (consistency kinds)
    #[arg(long)]
    intra_factor: Option<f64>,
    /// Upper bound of the between-block growth factors (consistency kinds)
    #[arg(long)]
    inter_growth: Option<f64>,
    /// Rng seed for the random-factor kinds (falls back to WIDE_GAPS_SEED)
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving distances.csv, verification.json, manifest.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyAxiomsArgs {
    /// Which property suite to run
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Trials per property
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Rng seed (falls back to WIDE_GAPS_SEED)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here as well as to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `--seed`, then `WIDE_GAPS_SEED`, then an error: sampling commands never
/// fall back to an implicit seed.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("WIDE_GAPS_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "WIDE_GAPS_SEED must be an unsigned integer, got {text:?}"
            ))
        }),
        Err(_) => Err(CliError::Usage(
            "this command samples: pass --seed or set WIDE_GAPS_SEED".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Check(args) => commands::check(args),
        Command::Cluster(args) => commands::cluster(args),
        Command::Transform(args) => commands::transform(args),
        Command::VerifyAxioms(args) => commands::verify_axioms(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; only real usage errors
            // should exit nonzero.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().expect("stderr is writable");
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
