use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree::{ClusterNode, TargetBatch};

use super::mac::{mac_accept, MacDecision, MacFailure};
use super::EvalConfig;

/// Clusters one batch interacts with, in traversal order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchLists {
    pub approx: Vec<usize>,
    pub direct: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InteractionLists {
    pub per_batch: Vec<BatchLists>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionCounts {
    /// Target-source kernel evaluations.
    pub direct_pairs: u64,
    /// Target-grid-node kernel evaluations.
    pub approx_pairs: u64,
}

impl InteractionCounts {
    pub fn total(&self) -> u64 {
        self.direct_pairs + self.approx_pairs
    }
}

impl std::ops::AddAssign for InteractionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.direct_pairs += rhs.direct_pairs;
        self.approx_pairs += rhs.approx_pairs;
    }
}

/// Runs the treecode recursion for one batch starting at `root`.
///
/// Accepted clusters go to the approximation list. A geometry failure on a
/// leaf means direct summation, on an internal node it recurses into the
/// children in index order. A size failure means direct summation with the
/// whole cluster, without recursing.
pub fn batch_lists<C: ClusterNode>(
    batch: &TargetBatch,
    clusters: &[C],
    root: usize,
    config: &EvalConfig,
) -> BatchLists {
    let mut lists = BatchLists::default();
    if clusters.is_empty() {
        return lists;
    }
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        let cluster = &clusters[id];
        match mac_accept(batch, cluster, config) {
            MacDecision::Accept => lists.approx.push(id),
            MacDecision::Reject(MacFailure::Geometry) if !cluster.is_leaf() => {
                stack.extend(cluster.children().rev());
            }
            MacDecision::Reject(_) => lists.direct.push(id),
        }
    }
    lists
}

pub fn build_interaction_lists<C: ClusterNode + Sync>(
    batches: &[TargetBatch],
    clusters: &[C],
    config: &EvalConfig,
) -> InteractionLists {
    InteractionLists {
        per_batch: batches
            .par_iter()
            .map(|b| batch_lists(b, clusters, 0, config))
            .collect(),
    }
}

impl InteractionLists {
    pub fn counts<C: ClusterNode>(&self, batches: &[TargetBatch], clusters: &[C], degree: usize) -> InteractionCounts {
        let grid = ((degree + 1) as u64).pow(3);
        let mut counts = InteractionCounts::default();
        for (b, lists) in batches.iter().zip(&self.per_batch) {
            let nb = b.len() as u64;
            counts.approx_pairs += nb * grid * lists.approx.len() as u64;
            counts.direct_pairs += nb
                * lists
                    .direct
                    .iter()
                    .map(|&c| clusters[c].num_particles() as u64)
                    .sum::<u64>();
        }
        counts
    }

    pub fn num_approx(&self) -> usize {
        self.per_batch.iter().map(|l| l.approx.len()).sum()
    }

    pub fn num_direct(&self) -> usize {
        self.per_batch.iter().map(|l| l.direct.len()).sum()
    }
}
