use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    batch_lists, eval_batch_approx, eval_batch_direct, BatchLists, EvalConfig, GridNodes, InteractionLists,
    PotentialAccumulator,
};
use crate::error::{BltcError, Result};
use crate::kernels::KernelSpec;
use crate::particles::{ParticleSlice, ParticleSystem};
use crate::tree::{cluster_grid, ClusterRecord, TargetBatch};

use super::window::WindowBoard;

/// What one rank fetched from another while building its LET.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchStats {
    /// Rank that issued the gets.
    pub origin: usize,
    /// Rank whose window was read.
    pub owner: usize,
    pub tree_records: usize,
    /// Distinct remote clusters in any of the origin's interaction lists.
    pub clusters_fetched: usize,
    pub moments_fetched: usize,
    pub particles_fetched: usize,
    pub bytes: usize,
}

/// Data fetched from one remote rank plus the lists that reference it.
#[derive(Clone, Debug)]
pub struct RemoteData {
    pub rank: usize,
    pub tree_array: Vec<ClusterRecord>,
    /// One entry per local target batch.
    pub lists: Vec<BatchLists>,
    moments: BTreeMap<usize, Vec<f64>>,
    /// Concatenated fetched source runs, each a merged interval of the
    /// owner's tree-ordered sources.
    sources: ParticleSystem,
    /// `(owner range, offset into sources)`, sorted and disjoint.
    intervals: Vec<(Range<usize>, usize)>,
}

/// Read access to a remote rank's clusters during evaluation.
pub trait RemoteSource: Sync {
    fn rank(&self) -> usize;
    fn records(&self) -> &[ClusterRecord];
    fn lists(&self) -> &[BatchLists];
    fn moments(&self, cluster: usize) -> Option<&[f64]>;
    fn sources(&self, range: Range<usize>) -> Option<ParticleSlice<'_>>;
}

impl RemoteSource for RemoteData {
    fn rank(&self) -> usize {
        self.rank
    }
    fn records(&self) -> &[ClusterRecord] {
        &self.tree_array
    }
    fn lists(&self) -> &[BatchLists] {
        &self.lists
    }
    fn moments(&self, cluster: usize) -> Option<&[f64]> {
        self.moments.get(&cluster).map(Vec::as_slice)
    }
    fn sources(&self, range: Range<usize>) -> Option<ParticleSlice<'_>> {
        let k = self.intervals.partition_point(|(r, _)| r.end <= range.start);
        let (r, offset) = self.intervals.get(k)?;
        if r.start > range.start || r.end < range.end {
            return None;
        }
        let start = offset + (range.start - r.start);
        Some(self.sources.slice(start..start + range.len()))
    }
}

/// Remote access straight through the published windows, bypassing the LET.
/// Used to check that the LET holds everything evaluation needs.
pub struct WindowRemote<'a> {
    pub rank: usize,
    pub board: &'a WindowBoard,
    pub tree_array: &'a [ClusterRecord],
    pub lists: &'a [BatchLists],
}

impl RemoteSource for WindowRemote<'_> {
    fn rank(&self) -> usize {
        self.rank
    }
    fn records(&self) -> &[ClusterRecord] {
        self.tree_array
    }
    fn lists(&self) -> &[BatchLists] {
        self.lists
    }
    fn moments(&self, cluster: usize) -> Option<&[f64]> {
        self.board.get_moments(self.rank, cluster).ok()
    }
    fn sources(&self, range: Range<usize>) -> Option<ParticleSlice<'_>> {
        self.board.get_sources(self.rank, range).ok()
    }
}

/// Count of LET entries that break sufficiency (referenced but not fetched)
/// or minimality (fetched but never referenced).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetAudit {
    pub missing_moments: usize,
    pub missing_particles: usize,
    pub unused_moments: usize,
    pub unused_particles: usize,
}

impl LetAudit {
    pub fn violations(&self) -> usize {
        self.missing_moments + self.missing_particles + self.unused_moments + self.unused_particles
    }
}

impl std::ops::AddAssign for LetAudit {
    fn add_assign(&mut self, rhs: Self) {
        self.missing_moments += rhs.missing_moments;
        self.missing_particles += rhs.missing_particles;
        self.unused_moments += rhs.unused_moments;
        self.unused_particles += rhs.unused_particles;
    }
}

#[derive(Clone, Debug)]
pub struct LocallyEssentialTree {
    pub rank: usize,
    /// Lists of every local batch against the rank's own tree.
    pub local: InteractionLists,
    /// One entry per other rank, ascending.
    pub remote: Vec<RemoteData>,
    pub stats: Vec<FetchStats>,
}

impl LocallyEssentialTree {
    /// Checks the fetched data against the interaction lists that use it.
    pub fn audit(&self) -> LetAudit {
        let mut audit = LetAudit::default();
        for r in &self.remote {
            let mut approx: Vec<usize> = r.lists.iter().flat_map(|l| l.approx.iter().copied()).collect();
            approx.sort_unstable();
            approx.dedup();
            audit.missing_moments += approx.iter().filter(|&&c| r.moments(c).is_none()).count();
            audit.unused_moments += r.moments.keys().filter(|c| approx.binary_search(c).is_err()).count();

            let direct: Vec<Range<usize>> = r
                .lists
                .iter()
                .flat_map(|l| l.direct.iter().map(|&c| r.tree_array[c].particles.clone()))
                .collect();
            audit.missing_particles += direct
                .iter()
                .filter(|&range| r.sources(range.clone()).is_none())
                .map(|range| range.len())
                .sum::<usize>();
            let used: usize = merge_ranges(direct).iter().map(|range| range.len()).sum();
            audit.unused_particles += r.sources.len().saturating_sub(used);
        }
        audit
    }
}

/// Sorted union of ranges, with overlapping and touching ranges merged.
fn merge_ranges(mut ranges: Vec<Range<usize>>) -> Vec<Range<usize>> {
    ranges.retain(|r| !r.is_empty());
    ranges.sort_unstable_by_key(|r| (r.start, r.end));
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match merged.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    merged
}

/// Two-step LET construction for `rank`.
///
/// Step 1 gets every other rank's tree array and runs the acceptance
/// recursion of each local batch against it. Step 2 gets exactly the moments
/// of remote clusters in some approximation list and the source runs of
/// remote clusters in some direct list. The owners take no part.
pub fn build_let(
    rank: usize,
    batches: &[TargetBatch],
    local: InteractionLists,
    board: &WindowBoard,
    config: &EvalConfig,
) -> Result<LocallyEssentialTree> {
    let grid_len = config.num_interp_points();
    let mut remote = Vec::new();
    let mut stats = Vec::new();
    for owner in (0..board.num_ranks()).filter(|&r| r != rank) {
        let tree_array = board.get_tree_array(owner)?.to_vec();
        let lists: Vec<BatchLists> = batches
            .par_iter()
            .map(|b| batch_lists(b, &tree_array, 0, config))
            .collect();

        let mut approx: Vec<usize> = lists.iter().flat_map(|l| l.approx.iter().copied()).collect();
        approx.sort_unstable();
        approx.dedup();
        let mut direct: Vec<usize> = lists.iter().flat_map(|l| l.direct.iter().copied()).collect();
        direct.sort_unstable();
        direct.dedup();

        let mut moments = BTreeMap::new();
        for &c in &approx {
            moments.insert(c, board.get_moments(owner, c)?.to_vec());
        }
        let mut sources = ParticleSystem::default();
        let mut intervals = Vec::new();
        for range in merge_ranges(direct.iter().map(|&c| tree_array[c].particles.clone()).collect()) {
            intervals.push((range.clone(), sources.len()));
            sources.extend_from_slice(board.get_sources(owner, range)?);
        }

        let mut clusters = approx.clone();
        clusters.extend(&direct);
        clusters.sort_unstable();
        clusters.dedup();
        stats.push(FetchStats {
            origin: rank,
            owner,
            tree_records: tree_array.len(),
            clusters_fetched: clusters.len(),
            moments_fetched: moments.len(),
            particles_fetched: sources.len(),
            bytes: tree_array.len() * std::mem::size_of::<ClusterRecord>()
                + moments.len() * grid_len * std::mem::size_of::<f64>()
                + sources.len() * 4 * std::mem::size_of::<f64>(),
        });
        remote.push(RemoteData {
            rank: owner,
            tree_array,
            lists,
            moments,
            sources,
            intervals,
        });
    }
    Ok(LocallyEssentialTree {
        rank,
        local,
        remote,
        stats,
    })
}

/// Applies one batch's lists against a remote rank: approximations first,
/// then direct sums, each in list order.
pub fn eval_remote<S: RemoteSource + ?Sized>(
    targets: ParticleSlice<'_>,
    lists: &BatchLists,
    remote: &S,
    degree: usize,
    kernel: &KernelSpec,
    acc: &mut PotentialAccumulator,
) -> Result<()> {
    let records = remote.records();
    let missing = |cluster| BltcError::MissingRemoteData {
        rank: remote.rank(),
        cluster,
    };
    for &c in &lists.approx {
        let q_hat = remote.moments(c).ok_or_else(|| missing(c))?;
        eval_batch_approx(
            targets,
            &GridNodes::new(&cluster_grid(&records[c].bbox, degree)),
            q_hat,
            kernel,
            acc,
        );
    }
    for &c in &lists.direct {
        let src = remote.sources(records[c].particles.clone()).ok_or_else(|| missing(c))?;
        eval_batch_direct(targets, src, kernel, acc);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge() {
        assert_eq!(merge_ranges(vec![5..9, 0..2, 2..3, 7..12, 20..20]), vec![0..3, 5..12]);
        assert!(merge_ranges(vec![]).is_empty());
    }
}
