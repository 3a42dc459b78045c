//! Node-to-community assignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeling of `n` nodes into `q` communities.
///
/// Invariants: every label is `< q` and `q >= 1`.  Communities may be empty;
/// `q` is the declared number of communities, not the number of occupied ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<u32>,
    q: u32,
}

impl Partition {
    /// Builds a partition, validating that all labels are below `q`.
    pub fn new(labels: Vec<u32>, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("partition needs q >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= q) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for q = {q}"
            )));
        }
        Ok(Self { labels, q })
    }

    /// Builds a partition with `q` taken as one past the largest label.
    pub fn from_labels(labels: Vec<u32>) -> Self {
        let q = labels.iter().copied().max().map_or(1, |m| m + 1);
        Self { labels, q }
    }

    /// The all-zeros partition: every node in one community.
    pub fn trivial(n: usize) -> Self {
        Self { labels: vec![0; n], q: 1 }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Community sizes, indexed by label.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.q as usize];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }

    /// Number of non-empty communities.
    pub fn occupied(&self) -> usize {
        self.counts().iter().filter(|&&c| c > 0).count()
    }
}
