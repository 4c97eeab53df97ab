//! Distance transforms and their verifiers.
//!
//! Five transform kinds cover the ways a pseudo-distance matrix may be
//! rewritten without destroying — and usually while strengthening — an
//! existing clustering structure:
//!
//! - **scale**: every distance multiplied by one positive α.
//! - **consistency**: within-block distances shrink, between-block
//!   distances grow, each pair by its own random factor.
//! - **relative consistency**: each block shrinks uniformly by its own
//!   factor (which preserves within-block distance order and ratios);
//!   between-block distances grow per pair.
//! - **lower-bounded relative consistency**: as above, but no distance
//!   may drop below the dataset's smallest distance σ; shrunk values are
//!   clamped up to it.
//! - **delta shift**: every squared off-diagonal distance gains a
//!   constant Δ, i.e. `d′ = √(d² + Δ)`.
//!
//! [`verify_transform`] re-checks a (before, after) pair against the
//! defining clauses of a kind and reports every violation it finds, so a
//! transform's output never has to be taken on faith. [`euclidization_delta`]
//! computes the smallest Δ-shift that makes a matrix Euclidean-embeddable.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{Clustering, ClusteringError};
use crate::dataset::{Dataset, DatasetError, PseudoDistanceMatrix};
use crate::rng;
use crate::tolerance;

/// A fully-parameterized transform. Parameters exist exactly where the
/// kind requires them, so an invalid combination is unrepresentable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    /// `d′ = α·d`. The only kind that keeps (and scales) an embedding.
    Scale { alpha: f64 },
    /// Within-block pairs shrink by independent factors drawn from
    /// `[intra_factor, 1]`; between-block pairs grow by independent
    /// factors from `[1, inter_growth]`.
    Consistency {
        clustering: Clustering,
        intra_factor: f64,
        inter_growth: f64,
    },
    /// Each block j draws one factor c_j from `[intra_factor, 1]` and all
    /// its within-block pairs shrink by exactly c_j; between-block pairs
    /// grow per pair as in `Consistency`.
    RelativeConsistency {
        clustering: Clustering,
        intra_factor: f64,
        inter_growth: f64,
    },
    /// As `RelativeConsistency`, but shrunk distances are clamped from
    /// below at σ (the smallest distance of the input): `d′ = max(σ, c_j·d)`.
    LowerBoundedRelativeConsistency {
        clustering: Clustering,
        intra_factor: f64,
        inter_growth: f64,
    },
    /// `d′ = √(d² + Δ)` for every off-diagonal pair.
    DeltaShift { delta: f64 },
}

impl TransformSpec {
    /// Parameter-range validation, independent of any dataset.
    fn validate(&self) -> Result<(), TransformError> {
        let bad = |msg: String| Err(TransformError::InvalidSpec(msg));
        match self {
            TransformSpec::Scale { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!(
                        "scale factor must be positive and finite, got {alpha}"
                    ));
                }
            }
            TransformSpec::Consistency {
                intra_factor,
                inter_growth,
                ..
            }
            | TransformSpec::RelativeConsistency {
                intra_factor,
                inter_growth,
                ..
            }
            | TransformSpec::LowerBoundedRelativeConsistency {
                intra_factor,
                inter_growth,
                ..
            } => {
                if !(intra_factor.is_finite() && *intra_factor > 0.0 && *intra_factor <= 1.0) {
                    return bad(format!(
                        "intra factor must lie in (0, 1], got {intra_factor}"
                    ));
                }
                if !(inter_growth.is_finite() && *inter_growth >= 1.0) {
                    return bad(format!(
                        "inter growth must be ≥ 1 and finite, got {inter_growth}"
                    ));
                }
            }
            TransformSpec::DeltaShift { delta } => {
                if !(delta.is_finite() && *delta >= 0.0) {
                    return bad(format!("shift must be nonnegative and finite, got {delta}"));
                }
            }
        }
        Ok(())
    }

    /// The clustering the transform is relative to, if its kind has one.
    pub fn clustering(&self) -> Option<&Clustering> {
        match self {
            TransformSpec::Consistency { clustering, .. }
            | TransformSpec::RelativeConsistency { clustering, .. }
            | TransformSpec::LowerBoundedRelativeConsistency { clustering, .. } => Some(clustering),
            TransformSpec::Scale { .. } | TransformSpec::DeltaShift { .. } => None,
        }
    }
}

/// Failures of transform application or verification.
#[derive(Debug, Error)]
pub enum TransformError {
    #[error("invalid transform parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    InvalidClustering(#[from] ClusteringError),
    #[error("datasets differ in size: {before} vs {after} points")]
    SizeMismatch { before: usize, after: usize },
    #[error(transparent)]
    InvalidResult(#[from] DatasetError),
}

/// Apply `spec` to `dataset`, drawing any random factors from a stream
/// seeded by `rng_seed`.
///
/// Draw order is fixed for reproducibility: per-block factors first (in
/// block order, for the relative kinds), then per-pair factors in
/// condensed matrix order. The embedding is dropped for every kind except
/// `Scale`, because the result is in general not Euclidean.
pub fn apply_transform(
    dataset: &Dataset,
    spec: &TransformSpec,
    rng_seed: u64,
) -> Result<Dataset, TransformError> {
    spec.validate()?;
    if let Some(clustering) = spec.clustering() {
        clustering.ensure_covers(dataset.n())?;
    }
    let n = dataset.n();
    let before = dataset.distances().condensed();
    let mut rng = rng::stream(rng_seed, &[]);

    let values: Vec<f64> = match spec {
        TransformSpec::Scale { alpha } => before.iter().map(|d| alpha * d).collect(),
        TransformSpec::DeltaShift { delta } => {
            before.iter().map(|d| (d * d + delta).sqrt()).collect()
        }
        TransformSpec::Consistency {
            clustering,
            intra_factor,
            inter_growth,
        } => map_pairs(n, before, |i, l, d| {
            if clustering.label_of(i) == clustering.label_of(l) {
                rng.random_range(*intra_factor..=1.0) * d
            } else {
                rng.random_range(1.0..=*inter_growth) * d
            }
        }),
        TransformSpec::RelativeConsistency {
            clustering,
            intra_factor,
            inter_growth,
        } => {
            let shrink: Vec<f64> = (0..clustering.k())
                .map(|_| rng.random_range(*intra_factor..=1.0))
                .collect();
            map_pairs(n, before, |i, l, d| {
                let (bi, bl) = (clustering.label_of(i), clustering.label_of(l));
                if bi == bl {
                    shrink[bi] * d
                } else {
                    rng.random_range(1.0..=*inter_growth) * d
                }
            })
        }
        TransformSpec::LowerBoundedRelativeConsistency {
            clustering,
            intra_factor,
            inter_growth,
        } => {
            let sigma = dataset.min_distance();
            let shrink: Vec<f64> = (0..clustering.k())
                .map(|_| rng.random_range(*intra_factor..=1.0))
                .collect();
            map_pairs(n, before, |i, l, d| {
                let (bi, bl) = (clustering.label_of(i), clustering.label_of(l));
                if bi == bl {
                    (shrink[bi] * d).max(sigma)
                } else {
                    rng.random_range(1.0..=*inter_growth) * d
                }
            })
        }
    };

    let matrix = PseudoDistanceMatrix::from_condensed(n, values)?;
    if let (TransformSpec::Scale { alpha }, Some(points)) = (spec, dataset.embedding()) {
        let scaled = points
            .iter()
            .map(|p| p.iter().map(|c| alpha * c).collect())
            .collect();
        return Ok(Dataset::from_matrix_with_embedding(matrix, scaled)?);
    }
    Ok(Dataset::from_matrix(matrix))
}

/// Apply `f(i, l, d)` to every condensed entry, keeping condensed order.
fn map_pairs(n: usize, values: &[f64], mut f: impl FnMut(usize, usize, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut idx = 0;
    for i in 0..n {
        for l in (i + 1)..n {
            out.push(f(i, l, values[idx]));
            idx += 1;
        }
    }
    out
}

/// The defining clause a pair or triple failed in [`verify_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// `d′ = α·d` (scale kind).
    ScaledExactly,
    /// `d′² = d² + Δ` (delta-shift kind).
    ShiftedExactly,
    /// Within-block pairs must not grow: `d′ ≤ d`.
    IntraNoGrowth,
    /// Between-block pairs must not shrink: `d′ ≥ d`.
    InterNoShrink,
    /// For co-block j, l seen from anchor i: `d(i,j) ≤ d(i,l)` must imply
    /// `d′(i,j) ≤ d′(i,l)`.
    OrderPreserved,
    /// For the same triples: `d′(i,l)/d′(i,j) ≤ d(i,l)/d(i,j)`.
    RatioBounded,
    /// No distance of the result may fall below σ of the input.
    LowerBounded,
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Clause::ScaledExactly => "d' = α·d",
            Clause::ShiftedExactly => "d'² = d² + Δ",
            Clause::IntraNoGrowth => "intra d' ≤ d",
            Clause::InterNoShrink => "inter d' ≥ d",
            Clause::OrderPreserved => "intra order preserved",
            Clause::RatioBounded => "intra ratios not increased",
            Clause::LowerBounded => "min distance ≥ σ of input",
        })
    }
}

/// One clause failure: which clause, on which points, with the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    /// The pair `[i, l]` or anchored triple `[i, j, l]` involved.
    pub ids: Vec<usize>,
    pub detail: String,
}

/// Outcome of [`verify_transform`]: `ok` iff no clause failed anywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Check that `after` relates to `before` exactly as `spec`'s kind
/// demands, clause by clause, over all applicable pairs and triples.
/// All comparisons are tolerance-adjusted, so verifying a freshly applied
/// transform never trips over representation noise.
pub fn verify_transform(
    before: &Dataset,
    after: &Dataset,
    spec: &TransformSpec,
) -> Result<VerificationReport, TransformError> {
    spec.validate()?;
    if before.n() != after.n() {
        return Err(TransformError::SizeMismatch {
            before: before.n(),
            after: after.n(),
        });
    }
    if let Some(clustering) = spec.clustering() {
        clustering.ensure_covers(before.n())?;
    }
    let mut violations = Vec::new();

    match spec {
        TransformSpec::Scale { alpha } => {
            for (i, l, d) in before.distances().iter_pairs() {
                let expected = alpha * d;
                let got = after.distance(i, l);
                if !tolerance::approx_eq(got, expected) {
                    violations.push(Violation {
                        clause: Clause::ScaledExactly,
                        ids: vec![i, l],
                        detail: format!("expected {expected}, got {got}"),
                    });
                }
            }
        }
        TransformSpec::DeltaShift { delta } => {
            for (i, l, d) in before.distances().iter_pairs() {
                let expected_sq = d * d + delta;
                let got_sq = after.distance(i, l).powi(2);
                if !tolerance::approx_eq(got_sq, expected_sq) {
                    violations.push(Violation {
                        clause: Clause::ShiftedExactly,
                        ids: vec![i, l],
                        detail: format!("expected squared {expected_sq}, got {got_sq}"),
                    });
                }
            }
        }
        TransformSpec::Consistency { clustering, .. } => {
            check_shrink_grow(before, after, clustering, &mut violations);
        }
        TransformSpec::RelativeConsistency { clustering, .. } => {
            check_shrink_grow(before, after, clustering, &mut violations);
            check_intra_triples(before, after, clustering, &mut violations);
        }
        TransformSpec::LowerBoundedRelativeConsistency { clustering, .. } => {
            check_shrink_grow(before, after, clustering, &mut violations);
            check_intra_triples(before, after, clustering, &mut violations);
            let sigma = before.min_distance();
            for (i, l, got) in after.distances().iter_pairs() {
                if !tolerance::approx_ge(got, sigma) {
                    violations.push(Violation {
                        clause: Clause::LowerBounded,
                        ids: vec![i, l],
                        detail: format!("distance {got} fell below σ = {sigma}"),
                    });
                }
            }
        }
    }

    Ok(VerificationReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// Clauses shared by all consistency kinds: within-block pairs must not
/// grow, between-block pairs must not shrink.
fn check_shrink_grow(
    before: &Dataset,
    after: &Dataset,
    clustering: &Clustering,
    violations: &mut Vec<Violation>,
) {
    for (i, l, d) in before.distances().iter_pairs() {
        let got = after.distance(i, l);
        if clustering.label_of(i) == clustering.label_of(l) {
            if !tolerance::approx_le(got, d) {
                violations.push(Violation {
                    clause: Clause::IntraNoGrowth,
                    ids: vec![i, l],
                    detail: format!("{d} grew to {got}"),
                });
            }
        } else if !tolerance::approx_ge(got, d) {
            violations.push(Violation {
                clause: Clause::InterNoShrink,
                ids: vec![i, l],
                detail: format!("{d} shrank to {got}"),
            });
        }
    }
}

/// Order and ratio clauses over every within-block triple: for anchor i
/// and co-members j, l with `d(i,j) ≤ d(i,l)`, the transformed distances
/// must keep that order and must not increase the ratio far/near. The
/// ratio is compared by cross-multiplication; the near distance is
/// strictly positive by pseudo-distance validity.
fn check_intra_triples(
    before: &Dataset,
    after: &Dataset,
    clustering: &Clustering,
    violations: &mut Vec<Violation>,
) {
    for members in clustering.blocks() {
        for &i in &members {
            for &j in &members {
                for &l in &members {
                    if i == j || i == l || j == l {
                        continue;
                    }
                    let d_near = before.distance(i, j);
                    let d_far = before.distance(i, l);
                    if d_near > d_far {
                        continue;
                    }
                    let t_near = after.distance(i, j);
                    let t_far = after.distance(i, l);
                    if !tolerance::approx_le(t_near, t_far) {
                        violations.push(Violation {
                            clause: Clause::OrderPreserved,
                            ids: vec![i, j, l],
                            detail: format!("before {d_near} ≤ {d_far}, after {t_near} > {t_far}"),
                        });
                    }
                    if !tolerance::approx_le(t_far * d_near, d_far * t_near) {
                        violations.push(Violation {
                            clause: Clause::RatioBounded,
                            ids: vec![i, j, l],
                            detail: format!("ratio rose: {t_far}/{t_near} > {d_far}/{d_near}"),
                        });
                    }
                }
            }
        }
    }
}

/// Relative tolerance for calling an eigenvalue "not negative" when
/// deciding embeddability, against the Frobenius norm of the centered
/// matrix.
pub const EMBED_REL_TOL: f64 = 1e-9;

/// Spectral summary of the double-centered squared-distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Embeddability {
    /// Smallest eigenvalue of the centered matrix.
    pub min_eigenvalue: f64,
    /// Frobenius norm of the centered matrix (sets the tolerance scale).
    pub norm: f64,
    /// True iff `min_eigenvalue ≥ −EMBED_REL_TOL · norm`: the distances
    /// are realizable (up to noise) as Euclidean distances of real points.
    pub embeddable: bool,
}

/// Analyze whether the dataset's distances are Euclidean-realizable, via
/// the spectrum of `B = −½·J·D²·J` (J the centering projector): they are
/// exactly when B is positive semidefinite.
pub fn embeddability(dataset: &Dataset) -> Embeddability {
    let b = centered_gram(dataset);
    let norm = frobenius(&b);
    let eigenvalues = jacobi_eigenvalues(b);
    let min_eigenvalue = eigenvalues.into_iter().fold(f64::INFINITY, f64::min);
    Embeddability {
        min_eigenvalue,
        norm,
        embeddable: min_eigenvalue >= -EMBED_REL_TOL * norm,
    }
}

/// The smallest Δ such that shifting every squared distance by Δ makes
/// the dataset Euclidean-embeddable: `max(0, −2·λ_min)` for the smallest
/// eigenvalue λ_min of the centered matrix. Already-embeddable inputs
/// (λ_min negative only within noise) return exactly 0.
pub fn euclidization_delta(dataset: &Dataset) -> f64 {
    let e = embeddability(dataset);
    if e.embeddable {
        0.0
    } else {
        -2.0 * e.min_eigenvalue
    }
}

/// `B = −½·J·D²·J` computed entrywise from row, column, and grand means
/// of the squared distances.
fn centered_gram(dataset: &Dataset) -> Vec<Vec<f64>> {
    let n = dataset.n();
    let mut d2 = vec![vec![0.0; n]; n];
    for (i, l, d) in dataset.distances().iter_pairs() {
        d2[i][l] = d * d;
        d2[l][i] = d * d;
    }
    let row_mean: Vec<f64> = d2
        .iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    let grand_mean = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for l in 0..n {
            b[i][l] = -0.5 * (d2[i][l] - row_mean[i] - row_mean[l] + grand_mean);
        }
    }
    b
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut sum = 0.0;
    for i in 0..n {
        for l in 0..n {
            if i != l {
                sum += a[i][l] * a[i][l];
            }
        }
    }
    sum.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, iterated
/// until the off-diagonal Frobenius norm falls below `1e-12` times the
/// matrix norm.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let norm = frobenius(&a);
    if n == 1 || norm == 0.0 {
        return (0..n).map(|i| a[i][i]).collect();
    }
    let target = 1e-12 * norm;
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        sweeps += 1;
        assert!(sweeps <= 200, "eigenvalue iteration failed to converge");
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r][p];
                        let arq = a[r][q];
                        a[r][p] = c * arp - s * arq;
                        a[p][r] = a[r][p];
                        a[r][q] = s * arp + c * arq;
                        a[q][r] = a[r][q];
                    }
                }
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost;
    use crate::separability;
    use crate::tolerance::approx_eq;

    fn four_point_fixture(inter: f64) -> (Dataset, Clustering) {
        let rows = vec![
            vec![0.0, 1.0, inter, inter],
            vec![1.0, 0.0, inter, inter],
            vec![inter, inter, 0.0, 1.0],
            vec![inter, inter, 1.0, 0.0],
        ];
        (
            Dataset::from_square_matrix(&rows).unwrap(),
            Clustering::new(vec![0, 0, 1, 1], 2).unwrap(),
        )
    }

    #[test]
    fn scale_by_one_is_the_identity() {
        let (ds, _) = four_point_fixture(3.0);
        let out = apply_transform(&ds, &TransformSpec::Scale { alpha: 1.0 }, 0).unwrap();
        assert_eq!(out.distances().condensed(), ds.distances().condensed());
    }

    #[test]
    fn spec_serialization_uses_stable_snake_case_tags() {
        // File formats downstream depend on these exact tag names.
        let spec = TransformSpec::DeltaShift { delta: 5.0 };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"delta_shift","delta":5.0}"#);
        let back: TransformSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        let clustering = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let spec = TransformSpec::LowerBoundedRelativeConsistency {
            clustering,
            intra_factor: 0.5,
            inter_growth: 1.5,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.starts_with(r#"{"kind":"lower_bounded_relative_consistency""#));
        let back: TransformSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn scale_multiplies_cost_quadratically_and_keeps_the_embedding() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        let ds = Dataset::from_points(&points).unwrap();
        let c = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let q = cost::kmeans_cost(&ds, &c).unwrap();
        let spec = TransformSpec::Scale { alpha: 2.0 };
        let out = apply_transform(&ds, &spec, 0).unwrap();
        let q2 = cost::kmeans_cost(&out, &c).unwrap();
        assert!(approx_eq(q2, 4.0 * q));
        let emb = out.embedding().expect("scale keeps the embedding");
        assert!(approx_eq(emb[1][0], 2.0));
        assert!(verify_transform(&ds, &out, &spec).unwrap().ok);
    }

    #[test]
    fn delta_shift_moves_the_residual_slack_by_exactly_delta() {
        let (ds, c) = four_point_fixture(3.0);
        let beta = cost::residual_slack(&ds, &c).unwrap();
        assert!(approx_eq(beta, 1.0));
        let spec = TransformSpec::DeltaShift { delta: 5.0 };
        let out = apply_transform(&ds, &spec, 0).unwrap();
        let beta_shifted = cost::residual_slack(&out, &c).unwrap();
        assert!(approx_eq(beta_shifted, 6.0));
        assert!(verify_transform(&ds, &out, &spec).unwrap().ok);
        assert!(out.embedding().is_none());
    }

    #[test]
    fn delta_shift_grid_never_flips_the_residual_verdict() {
        // One separable and one inseparable fixture, shifted across four
        // magnitudes of Δ relative to σ².
        for inter in [3.0, 0.9] {
            let (ds, c) = four_point_fixture(inter);
            let sigma_sq = ds.min_distance().powi(2);
            let before = separability::check_residual(&ds, &c).unwrap().separable;
            for factor in [0.1, 1.0, 10.0, 100.0] {
                let spec = TransformSpec::DeltaShift {
                    delta: factor * sigma_sq,
                };
                let out = apply_transform(&ds, &spec, 0).unwrap();
                let after = separability::check_residual(&out, &c).unwrap().separable;
                assert_eq!(before, after, "verdict flipped at Δ = {factor}·σ²");
            }
        }
    }

    #[test]
    fn consistency_shrinks_intra_and_grows_inter() {
        let (ds, c) = four_point_fixture(3.0);
        let spec = TransformSpec::Consistency {
            clustering: c.clone(),
            intra_factor: 0.5,
            inter_growth: 2.0,
        };
        let out = apply_transform(&ds, &spec, 17).unwrap();
        for (i, l, d) in ds.distances().iter_pairs() {
            let got = out.distance(i, l);
            if c.label_of(i) == c.label_of(l) {
                assert!(got <= d && got >= 0.5 * d);
            } else {
                assert!(got >= d && got <= 2.0 * d);
            }
        }
        assert!(verify_transform(&ds, &out, &spec).unwrap().ok);
    }

    #[test]
    fn relative_consistency_shrinks_each_block_uniformly() {
        let (ds, c) = four_point_fixture(3.0);
        let spec = TransformSpec::RelativeConsistency {
            clustering: c.clone(),
            intra_factor: 0.4,
            inter_growth: 1.5,
        };
        let out = apply_transform(&ds, &spec, 23).unwrap();
        // Within a block every pair has the same before/after ratio.
        let r0 = out.distance(0, 1) / ds.distance(0, 1);
        let r1 = out.distance(2, 3) / ds.distance(2, 3);
        assert!((0.4..=1.0).contains(&r0));
        assert!((0.4..=1.0).contains(&r1));
        assert!(verify_transform(&ds, &out, &spec).unwrap().ok);
    }

    #[test]
    fn lower_bounded_shrink_clamps_at_sigma() {
        // All within-block distances equal σ, so any shrink factor gets
        // clamped right back: intra distances must come out unchanged.
        let (ds, c) = four_point_fixture(5.0);
        let spec = TransformSpec::LowerBoundedRelativeConsistency {
            clustering: c.clone(),
            intra_factor: 0.5,
            inter_growth: 1.0,
        };
        let out = apply_transform(&ds, &spec, 99).unwrap();
        assert_eq!(out.distance(0, 1), 1.0);
        assert_eq!(out.distance(2, 3), 1.0);
        assert_eq!(out.distance(0, 2), 5.0);
        assert!(verify_transform(&ds, &out, &spec).unwrap().ok);
        assert!(out.min_distance() >= ds.min_distance());
    }

    #[test]
    fn clamped_shrink_passes_the_triple_clauses() {
        // A block with spread-out internal distances, shrunk by one-half
        // and clamped at σ: clamping lifts the nearer (smaller) distance,
        // which can only lower far/near ratios, so verification must pass.
        let rows = vec![
            vec![0.0, 1.0, 1.5, 2.5, 10.0, 10.0],
            vec![1.0, 0.0, 2.0, 3.5, 10.0, 10.0],
            vec![1.5, 2.0, 0.0, 3.0, 10.0, 10.0],
            vec![2.5, 3.5, 3.0, 0.0, 10.0, 10.0],
            vec![10.0, 10.0, 10.0, 10.0, 0.0, 1.2],
            vec![10.0, 10.0, 10.0, 10.0, 1.2, 0.0],
        ];
        let ds = Dataset::from_square_matrix(&rows).unwrap();
        let c = Clustering::new(vec![0, 0, 0, 0, 1, 1], 2).unwrap();
        let sigma = ds.min_distance();
        assert_eq!(sigma, 1.0);
        // Build the clamped result by hand with a fixed factor of 0.5.
        let clamped: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|l| {
                        let d = ds.distance(i, l);
                        if i == l {
                            0.0
                        } else if c.label_of(i) == c.label_of(l) {
                            (0.5 * d).max(sigma)
                        } else {
                            d
                        }
                    })
                    .collect()
            })
            .collect();
        let out = Dataset::from_square_matrix(&clamped).unwrap();
        let spec = TransformSpec::LowerBoundedRelativeConsistency {
            clustering: c,
            intra_factor: 0.5,
            inter_growth: 1.0,
        };
        let report = verify_transform(&ds, &out, &spec).unwrap();
        assert!(report.ok, "violations: {:?}", report.violations);
    }

    #[test]
    fn verify_flags_a_grown_intra_pair() {
        let (ds, c) = four_point_fixture(3.0);
        let mut rows = ds.distances().to_square();
        rows[0][1] = 1.01;
        rows[1][0] = 1.01;
        let tampered = Dataset::from_square_matrix(&rows).unwrap();
        let spec = TransformSpec::Consistency {
            clustering: c,
            intra_factor: 0.5,
            inter_growth: 2.0,
        };
        let report = verify_transform(&ds, &tampered, &spec).unwrap();
        assert!(!report.ok);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].clause, Clause::IntraNoGrowth);
        assert_eq!(report.violations[0].ids, vec![0, 1]);
    }

    #[test]
    fn verify_flags_order_and_ratio_breaches_on_triples() {
        // One 3-point block. Before: d01=1, d02=2, d12=2. After shrinks
        // everything but reverses the order seen from anchor 0 and blows
        // up the ratio seen from anchor 1.
        let before = Dataset::from_square_matrix(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ])
        .unwrap();
        let after = Dataset::from_square_matrix(&[
            vec![0.0, 0.9, 0.8],
            vec![0.9, 0.0, 1.9],
            vec![0.8, 1.9, 0.0],
        ])
        .unwrap();
        let spec = TransformSpec::RelativeConsistency {
            clustering: Clustering::single_block(3).unwrap(),
            intra_factor: 0.1,
            inter_growth: 1.0,
        };
        let report = verify_transform(&before, &after, &spec).unwrap();
        assert!(!report.ok);
        let order = report
            .violations
            .iter()
            .filter(|v| v.clause == Clause::OrderPreserved);
        let ratio = report
            .violations
            .iter()
            .filter(|v| v.clause == Clause::RatioBounded);
        assert_eq!(order.count(), 2);
        assert_eq!(ratio.count(), 2);
    }

    #[test]
    fn verify_rejects_mismatched_sizes_and_bad_parameters() {
        let (ds, c) = four_point_fixture(3.0);
        let (small, _) = four_point_fixture(3.0);
        let small = small.restrict(&[0, 1, 2]).unwrap();
        assert!(matches!(
            verify_transform(&ds, &small, &TransformSpec::Scale { alpha: 2.0 }),
            Err(TransformError::SizeMismatch {
                before: 4,
                after: 3
            })
        ));
        for spec in [
            TransformSpec::Scale { alpha: 0.0 },
            TransformSpec::DeltaShift { delta: -1.0 },
            TransformSpec::Consistency {
                clustering: c.clone(),
                intra_factor: 0.0,
                inter_growth: 2.0,
            },
            TransformSpec::Consistency {
                clustering: c.clone(),
                intra_factor: 0.5,
                inter_growth: 0.5,
            },
        ] {
            assert!(matches!(
                apply_transform(&ds, &spec, 0),
                Err(TransformError::InvalidSpec(_))
            ));
        }
    }

    #[test]
    fn triangle_violating_triple_needs_a_positive_shift() {
        // Distances 1, 1, 3 cannot come from points in any Euclidean
        // space; the smallest centering eigenvalue is −5/6, so the minimal
        // shift is 5/3. After shifting, the spectrum is clean.
        let ds = Dataset::from_square_matrix(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 3.0],
            vec![1.0, 3.0, 0.0],
        ])
        .unwrap();
        let e = embeddability(&ds);
        assert!(!e.embeddable);
        assert!(approx_eq(e.min_eigenvalue, -5.0 / 6.0));
        let delta = euclidization_delta(&ds);
        assert!(approx_eq(delta, 5.0 / 3.0));
        let shifted = apply_transform(&ds, &TransformSpec::DeltaShift { delta }, 0).unwrap();
        assert!(embeddability(&shifted).embeddable);
    }

    #[test]
    fn euclidean_input_needs_no_shift() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![3.0, -1.0],
            vec![-2.0, 2.0],
            vec![0.5, 4.0],
        ];
        let ds = Dataset::from_points(&points).unwrap();
        assert_eq!(euclidization_delta(&ds), 0.0);
        assert!(embeddability(&ds).embeddable);
    }

    #[test]
    fn shifts_beyond_the_minimum_stay_embeddable() {
        let ds = Dataset::from_square_matrix(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 3.0],
            vec![1.0, 3.0, 0.0],
        ])
        .unwrap();
        let base = euclidization_delta(&ds);
        for extra in [0.001, 0.1, 1.0, 25.0] {
            let spec = TransformSpec::DeltaShift {
                delta: base + extra,
            };
            let shifted = apply_transform(&ds, &spec, 0).unwrap();
            assert!(
                embeddability(&shifted).embeddable,
                "not embeddable at Δ* + {extra}"
            );
        }
    }

    #[test]
    fn applied_transforms_verify_round_trip() {
        // Deterministic sweep over kinds, seeds, and two datasets: the
        // verifier must accept whatever apply_transform produced.
        let (euclid, c) = {
            let points = vec![
                vec![0.0, 0.0],
                vec![0.6, 0.1],
                vec![0.2, 0.7],
                vec![9.0, 9.0],
                vec![9.5, 8.6],
                vec![8.8, 9.4],
            ];
            (
                Dataset::from_points(&points).unwrap(),
                Clustering::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap(),
            )
        };
        let (ugly, c2) = four_point_fixture(2.2);
        let cases: Vec<(Dataset, Clustering)> = vec![(euclid, c), (ugly, c2)];
        for (ds, c) in &cases {
            for seed in 0..10u64 {
                let specs = [
                    TransformSpec::Scale {
                        alpha: 0.5 + seed as f64,
                    },
                    TransformSpec::DeltaShift {
                        delta: seed as f64 * 0.7,
                    },
                    TransformSpec::Consistency {
                        clustering: c.clone(),
                        intra_factor: 0.3,
                        inter_growth: 2.5,
                    },
                    TransformSpec::RelativeConsistency {
                        clustering: c.clone(),
                        intra_factor: 0.6,
                        inter_growth: 1.8,
                    },
                    TransformSpec::LowerBoundedRelativeConsistency {
                        clustering: c.clone(),
                        intra_factor: 0.2,
                        inter_growth: 1.1,
                    },
                ];
                for spec in specs {
                    let out = apply_transform(ds, &spec, seed).unwrap();
                    let report = verify_transform(ds, &out, &spec).unwrap();
                    assert!(
                        report.ok,
                        "spec {spec:?} seed {seed}: {:?}",
                        report.violations
                    );
                    if !matches!(spec, TransformSpec::Scale { .. }) {
                        assert!(out.embedding().is_none());
                    }
                }
            }
        }
    }
}
