//! Datasets over pseudo-distances.
//!
//! A pseudo-distance is symmetric, zero exactly on the diagonal, and
//! strictly positive off it — and that is the whole contract. The triangle
//! inequality is deliberately *not* required, so matrices no metric space
//! could produce (say distances 1, 1, 3 on a triple) are valid inputs, and
//! everything downstream must cope with them.
//!
//! Points are identified by their index `0..n`. When a dataset is built
//! from coordinates the embedding is kept alongside the distance matrix and
//! is guaranteed consistent with it; datasets built from a bare matrix have
//! no embedding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

/// Validation failures when constructing a dataset.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("a dataset needs at least 2 points, got {0}")]
    TooSmall(usize),
    #[error("points {0} and {1} coincide: off-diagonal distances must be strictly positive")]
    DuplicatePoint(usize, usize),
    #[error("asymmetric input at ({i}, {l}): {upper} vs {lower}")]
    AsymmetricInput {
        i: usize,
        l: usize,
        upper: f64,
        lower: f64,
    },
    #[error("negative distance {value} between points {i} and {l}")]
    NegativeDistance { i: usize, l: usize, value: f64 },
    #[error("non-finite distance between points {0} and {1}")]
    NonFiniteDistance(usize, usize),
    #[error("diagonal entry {value} at point {i} must be zero")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    BadRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("condensed storage has {got} entries, expected {expected} for n = {n}")]
    BadCondensedLength {
        n: usize,
        got: usize,
        expected: usize,
    },
    #[error("point {point} has {got} coordinates, expected {expected}")]
    BadPoint {
        point: usize,
        got: usize,
        expected: usize,
    },
    #[error("embedding has {got} rows, expected one per point ({expected})")]
    EmbeddingSizeMismatch { got: usize, expected: usize },
    #[error("non-finite coordinate on point {0}")]
    NonFiniteCoordinate(usize),
    #[error("restriction needs at least 2 distinct in-range point ids")]
    BadRestriction,
}

/// Symmetric pseudo-distance matrix, condensed.
///
/// Only the strict upper triangle is stored, row by row: the distance
/// between points `i < l` lives at flat index `i*n - i*(i+1)/2 + (l-i-1)`.
/// The diagonal is implicitly zero and [`get`](Self::get) accepts indices
/// in either order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoDistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PseudoDistanceMatrix {
    /// Build from condensed upper-triangular values (see the type docs for
    /// the index order). Validates positivity and finiteness.
    pub fn from_condensed(n: usize, values: Vec<f64>) -> Result<Self, DatasetError> {
        if n < 2 {
            return Err(DatasetError::TooSmall(n));
        }
        let expected = n * (n - 1) / 2;
        if values.len() != expected {
            return Err(DatasetError::BadCondensedLength {
                n,
                got: values.len(),
                expected,
            });
        }
        let matrix = PseudoDistanceMatrix { n, values };
        for (i, l, d) in matrix.iter_pairs() {
            if !d.is_finite() {
                return Err(DatasetError::NonFiniteDistance(i, l));
            }
            if d < 0.0 {
                return Err(DatasetError::NegativeDistance { i, l, value: d });
            }
            if d == 0.0 {
                return Err(DatasetError::DuplicatePoint(i, l));
            }
        }
        Ok(matrix)
    }

    /// Build from a full square matrix, checking shape, zero diagonal and
    /// symmetry (within the crate tolerance). The upper triangle is kept.
    pub fn from_square(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let n = rows.len();
        if n < 2 {
            return Err(DatasetError::TooSmall(n));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(DatasetError::BadRow {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
            if rows[i][i] != 0.0 {
                return Err(DatasetError::NonZeroDiagonal {
                    i,
                    value: rows[i][i],
                });
            }
        }
        let mut values = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for l in (i + 1)..n {
                let (upper, lower) = (rows[i][l], rows[l][i]);
                if !tolerance::approx_eq(upper, lower) {
                    return Err(DatasetError::AsymmetricInput { i, l, upper, lower });
                }
                values.push(upper);
            }
        }
        Self::from_condensed(n, values)
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.n
    }

    fn flat(&self, i: usize, l: usize) -> usize {
        debug_assert!(i < l && l < self.n);
        i * self.n - i * (i + 1) / 2 + (l - i - 1)
    }

    /// Distance between `i` and `l` (0 when `i == l`). Panics on
    /// out-of-range indices.
    pub fn get(&self, i: usize, l: usize) -> f64 {
        assert!(i < self.n && l < self.n, "point id out of range");
        match i.cmp(&l) {
            std::cmp::Ordering::Less => self.values[self.flat(i, l)],
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => self.values[self.flat(l, i)],
        }
    }

    /// Iterate all unordered pairs `(i, l, d)` with `i < l`.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |l| (i, l)))
            .zip(self.values.iter())
            .map(|((i, l), &d)| (i, l, d))
    }

    /// Minimum off-diagonal distance (the shortest gap anywhere).
    pub fn min_distance(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Condensed values in storage order.
    pub fn condensed(&self) -> &[f64] {
        &self.values
    }

    /// Render as a full square matrix.
    pub fn to_square(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|l| self.get(i, l)).collect())
            .collect()
    }
}

/// A validated dataset: n points (ids `0..n`), their pairwise
/// pseudo-distances, and optionally the coordinates they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    distances: PseudoDistanceMatrix,
    embedding: Option<Vec<Vec<f64>>>,
}

impl Dataset {
    /// Build from coordinates. Distances are the pairwise Euclidean ones,
    /// so the embedding-consistency invariant holds by construction.
    /// Coinciding points are rejected as duplicates.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let n = points.len();
        if n < 2 {
            return Err(DatasetError::TooSmall(n));
        }
        let dim = points[0].len();
        for (idx, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DatasetError::BadPoint {
                    point: idx,
                    got: p.len(),
                    expected: dim,
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(DatasetError::NonFiniteCoordinate(idx));
            }
        }
        let mut values = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for l in (i + 1)..n {
                let d2: f64 = points[i]
                    .iter()
                    .zip(&points[l])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                values.push(d2.sqrt());
            }
        }
        let distances = PseudoDistanceMatrix::from_condensed(n, values)?;
        Ok(Dataset {
            distances,
            embedding: Some(points.to_vec()),
        })
    }

    /// Build from a full square distance matrix; no embedding.
    pub fn from_square_matrix(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        Ok(Dataset {
            distances: PseudoDistanceMatrix::from_square(rows)?,
            embedding: None,
        })
    }

    /// Wrap an already-validated matrix; no embedding.
    pub fn from_matrix(distances: PseudoDistanceMatrix) -> Self {
        Dataset {
            distances,
            embedding: None,
        }
    }

    /// Wrap an already-validated matrix together with coordinates for its
    /// points. Shape and finiteness of the coordinates are checked; their
    /// geometric consistency with the matrix is the caller's claim (used
    /// where the matrix was derived from the coordinates by construction,
    /// e.g. by uniformly scaling both).
    pub fn from_matrix_with_embedding(
        distances: PseudoDistanceMatrix,
        embedding: Vec<Vec<f64>>,
    ) -> Result<Self, DatasetError> {
        let n = distances.n();
        if embedding.len() != n {
            return Err(DatasetError::EmbeddingSizeMismatch {
                got: embedding.len(),
                expected: n,
            });
        }
        let dim = embedding[0].len();
        for (idx, p) in embedding.iter().enumerate() {
            if p.len() != dim {
                return Err(DatasetError::BadPoint {
                    point: idx,
                    got: p.len(),
                    expected: dim,
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(DatasetError::NonFiniteCoordinate(idx));
            }
        }
        Ok(Dataset {
            distances,
            embedding: Some(embedding),
        })
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.distances.n()
    }

    /// Stable point identifiers, `0..n`.
    pub fn point_ids(&self) -> std::ops::Range<usize> {
        0..self.n()
    }

    /// Distance between two points.
    pub fn distance(&self, i: usize, l: usize) -> f64 {
        self.distances.get(i, l)
    }

    /// The distance matrix.
    pub fn distances(&self) -> &PseudoDistanceMatrix {
        &self.distances
    }

    /// Coordinates, if this dataset was built from points.
    pub fn embedding(&self) -> Option<&[Vec<f64>]> {
        self.embedding.as_deref()
    }

    /// Embedding dimension, if any.
    pub fn dim(&self) -> Option<usize> {
        self.embedding.as_ref().map(|e| e[0].len())
    }

    /// Minimum off-diagonal distance (written σ in reports).
    pub fn min_distance(&self) -> f64 {
        self.distances.min_distance()
    }

    /// Sub-dataset on the given point ids, re-indexed `0..ids.len()` in the
    /// order supplied. The embedding rows, when present, come along.
    pub fn restrict(&self, ids: &[usize]) -> Result<Dataset, DatasetError> {
        let n = self.n();
        if ids.len() < 2 || ids.iter().any(|&i| i >= n) {
            return Err(DatasetError::BadRestriction);
        }
        let mut seen = vec![false; n];
        for &i in ids {
            if seen[i] {
                return Err(DatasetError::BadRestriction);
            }
            seen[i] = true;
        }
        let m = ids.len();
        let mut values = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..m {
            for b in (a + 1)..m {
                values.push(self.distances.get(ids[a], ids[b]));
            }
        }
        let distances = PseudoDistanceMatrix::from_condensed(m, values)?;
        let embedding = self
            .embedding
            .as_ref()
            .map(|pts| ids.iter().map(|&i| pts[i].clone()).collect());
        Ok(Dataset {
            distances,
            embedding,
        })
    }
}
