//! Partitions into blocks of at least two points.
//!
//! Every clustering in this crate covers all points and gives each block at
//! least two members — singletons are rejected at construction, everywhere.
//! Block labels run `0..k`; two clusterings describe the same partition when
//! their co-membership relations agree, regardless of how blocks are
//! numbered (see [`Clustering::same_partition`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Why a label vector fails to be a valid clustering.
#[derive(Debug, Error)]
pub enum ClusteringError {
    #[error("a clustering needs at least one block")]
    NoBlocks,
    #[error("point {point} carries label {label}, out of range for k = {k}")]
    LabelOutOfRange {
        point: usize,
        label: usize,
        k: usize,
    },
    #[error("block {block} has {size} member(s); every block needs at least 2")]
    BlockTooSmall { block: usize, size: usize },
    #[error("clustering covers {labels} points but the dataset has {points}")]
    SizeMismatch { labels: usize, points: usize },
}

/// A partition of points `0..n` into `k` blocks, each of size ≥ 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Validate a label vector against an explicit block count.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, ClusteringError> {
        if k == 0 {
            return Err(ClusteringError::NoBlocks);
        }
        let mut sizes = vec![0usize; k];
        for (point, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(ClusteringError::LabelOutOfRange { point, label, k });
            }
            sizes[label] += 1;
        }
        for (block, &size) in sizes.iter().enumerate() {
            if size < 2 {
                return Err(ClusteringError::BlockTooSmall { block, size });
            }
        }
        Ok(Clustering { labels, k })
    }

    /// Validate a label vector, inferring `k` as the largest label + 1.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self, ClusteringError> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(labels, k)
    }

    /// The one-block partition of `n` points.
    pub fn single_block(n: usize) -> Result<Self, ClusteringError> {
        Self::new(vec![0; n], 1)
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of points covered.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// The label of point `i`.
    pub fn label_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// All labels, indexed by point id.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Members of each block, in ascending point-id order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (point, &label) in self.labels.iter().enumerate() {
            blocks[label].push(point);
        }
        blocks
    }

    /// Size of each block.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &label in &self.labels {
            sizes[label] += 1;
        }
        sizes
    }

    /// Check this clustering covers exactly the points of a dataset.
    pub fn ensure_covers(&self, n: usize) -> Result<(), ClusteringError> {
        if self.labels.len() != n {
            return Err(ClusteringError::SizeMismatch {
                labels: self.labels.len(),
                points: n,
            });
        }
        Ok(())
    }

    /// Relabel blocks by order of first appearance (canonical form for
    /// partition comparison).
    pub fn canonical(&self) -> Clustering {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Clustering { labels, k: self.k }
    }

    /// True when both clusterings induce the same partition, ignoring how
    /// blocks happen to be numbered.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.labels.len() == other.labels.len()
            && self.k == other.k
            && self.canonical().labels == other.canonical().labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_two_block_clustering() {
        let c = Clustering::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.block_sizes(), vec![2, 3]);
        assert_eq!(c.blocks(), vec![vec![0, 1], vec![2, 3, 4]]);
    }

    #[test]
    fn singleton_blocks_are_rejected() {
        assert!(matches!(
            Clustering::new(vec![0, 1, 1], 2),
            Err(ClusteringError::BlockTooSmall { block: 0, size: 1 })
        ));
    }

    #[test]
    fn empty_blocks_are_rejected() {
        assert!(matches!(
            Clustering::new(vec![0, 0, 0, 0], 2),
            Err(ClusteringError::BlockTooSmall { block: 1, size: 0 })
        ));
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        assert!(matches!(
            Clustering::new(vec![0, 0, 2, 2], 2),
            Err(ClusteringError::LabelOutOfRange {
                point: 2,
                label: 2,
                k: 2
            })
        ));
    }

    #[test]
    fn from_labels_infers_k() {
        let c = Clustering::from_labels(vec![1, 1, 0, 0]).unwrap();
        assert_eq!(c.k(), 2);
    }

    #[test]
    fn partition_equality_ignores_block_numbering() {
        let a = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let b = Clustering::new(vec![1, 1, 0, 0], 2).unwrap();
        let c = Clustering::new(vec![0, 1, 0, 1], 2).unwrap();
        assert!(a.same_partition(&b));
        assert!(!a.same_partition(&c));
    }

    #[test]
    fn single_block_needs_two_points() {
        assert!(Clustering::single_block(2).is_ok());
        assert!(Clustering::single_block(1).is_err());
    }
}
