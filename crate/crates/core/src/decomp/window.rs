use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;

use crate::error::{BltcError, Result};
use crate::moments::TreeMoments;
use crate::particles::{ParticleSlice, ParticleSystem};
use crate::tree::ClusterRecord;

/// Read-only data a rank exposes to the others.
#[derive(Clone, Debug)]
pub struct Window {
    pub tree_array: Vec<ClusterRecord>,
    /// Sources in the owner's tree order; cluster particle ranges index this.
    pub sources: ParticleSystem,
    pub moments: TreeMoments,
}

/// Write-once windows of all ranks behind a publish barrier.
///
/// Every rank publishes once, then [`WindowBoard::seal`] acts as the global
/// barrier. Reads before the barrier fail with `WindowNotReady`; after it they
/// are plain shared reads of immutable data.
#[derive(Debug)]
pub struct WindowBoard {
    slots: Vec<OnceLock<Window>>,
    sealed: AtomicBool,
}

impl WindowBoard {
    pub fn new(ranks: usize) -> Self {
        Self {
            slots: (0..ranks).map(|_| OnceLock::new()).collect(),
            sealed: AtomicBool::new(false),
        }
    }

    pub fn num_ranks(&self) -> usize {
        self.slots.len()
    }

    pub fn publish(&self, rank: usize, window: Window) -> Result<()> {
        if self.sealed.load(Ordering::Acquire) {
            return Err(BltcError::InvalidConfig(format!(
                "rank {rank} published after the barrier"
            )));
        }
        let slot = self
            .slots
            .get(rank)
            .ok_or_else(|| BltcError::InvalidConfig(format!("no rank {rank}")))?;
        slot.set(window)
            .map_err(|_| BltcError::InvalidConfig(format!("rank {rank} published twice")))
    }

    /// The publish barrier. Fails, naming the first missing rank, unless every
    /// rank has published.
    pub fn seal(&self) -> Result<()> {
        if let Some(rank) = self.slots.iter().position(|s| s.get().is_none()) {
            return Err(BltcError::WindowNotReady { rank });
        }
        self.sealed.store(true, Ordering::Release);
        Ok(())
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed.load(Ordering::Acquire)
    }

    fn window(&self, rank: usize) -> Result<&Window> {
        if !self.is_sealed() {
            return Err(BltcError::WindowNotReady { rank });
        }
        self.slots
            .get(rank)
            .and_then(OnceLock::get)
            .ok_or(BltcError::WindowNotReady { rank })
    }

    /// One-sided get of a rank's whole tree array.
    pub fn get_tree_array(&self, rank: usize) -> Result<&[ClusterRecord]> {
        Ok(&self.window(rank)?.tree_array)
    }

    /// One-sided get of one cluster's modified charges.
    pub fn get_moments(&self, rank: usize, cluster: usize) -> Result<&[f64]> {
        let w = self.window(rank)?;
        w.moments
            .get(cluster)
            .ok_or_else(|| BltcError::InvalidConfig(format!("rank {rank} has no moments for cluster {cluster}")))
    }

    /// One-sided get of a contiguous run of a rank's sources.
    pub fn get_sources(&self, rank: usize, range: Range<usize>) -> Result<ParticleSlice<'_>> {
        Ok(self.window(rank)?.sources.slice(range))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_tree_moments;
    use crate::tree::build_source_tree;

    fn window(n: usize, seed: u64) -> Window {
        let sys = crate::harness::generate_particles(n, seed);
        let tree = build_source_tree(&sys, 50, 2).unwrap();
        Window {
            tree_array: tree.tree_array(),
            moments: compute_tree_moments(&tree),
            sources: tree.sources,
        }
    }

    #[test]
    fn read_before_barrier_fails() {
        let board = WindowBoard::new(2);
        board.publish(0, window(100, 1)).unwrap();
        assert!(matches!(
            board.get_tree_array(0),
            Err(BltcError::WindowNotReady { rank: 0 })
        ));
        assert!(matches!(board.seal(), Err(BltcError::WindowNotReady { rank: 1 })));
        assert!(!board.is_sealed());
    }

    #[test]
    fn two_ranks_see_each_others_cluster_counts() {
        let (w0, w1) = (window(300, 1), window(500, 2));
        let (n0, n1) = (w0.tree_array.len(), w1.tree_array.len());
        let board = WindowBoard::new(2);
        board.publish(1, w1).unwrap();
        board.publish(0, w0).unwrap();
        board.seal().unwrap();
        assert_eq!(board.get_tree_array(1).unwrap().len(), n1);
        assert_eq!(board.get_tree_array(0).unwrap().len(), n0);
        assert_eq!(board.get_sources(1, 0..10).unwrap().len(), 10);
    }

    #[test]
    fn write_once() {
        let board = WindowBoard::new(1);
        board.publish(0, window(50, 3)).unwrap();
        assert!(board.publish(0, window(50, 3)).is_err());
        board.seal().unwrap();
        assert!(board.publish(0, window(50, 3)).is_err());
    }
}
