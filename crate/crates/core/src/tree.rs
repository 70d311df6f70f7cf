//! Source cluster tree and target batches.
//!
//! Both are produced by the same partitioner: a cluster is split at the
//! midpoint of its minimal bounding box along every dimension whose extent is
//! within a factor `sqrt(2)` of the longest one, then each child box is shrunk
//! to the minimal box of its own particles. Particles are reordered so every
//! node owns a contiguous index range, and siblings occupy a contiguous range
//! of node indices.

use std::f64::consts::SQRT_2;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{BltcError, Result};
use crate::interp::ChebyshevGrid1D;
use crate::particles::ParticleSystem;

/// Box extents below this are treated as zero. A cluster with any such
/// extent is never approximated.
pub const DEGENERATE_EXTENT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    /// Minimal box around the listed particles.
    pub fn around(sys: &ParticleSystem, indices: &[usize]) -> Self {
        let mut b = Self::empty();
        for &i in indices {
            b.include(sys.position(i));
        }
        b
    }

    pub fn around_range(sys: &ParticleSystem, range: Range<usize>) -> Self {
        let mut b = Self::empty();
        for i in range {
            b.include(sys.position(i));
        }
        b
    }

    #[inline]
    pub fn include(&mut self, p: [f64; 3]) {
        for d in 0..3 {
            self.min[d] = self.min[d].min(p[d]);
            self.max[d] = self.max[d].max(p[d]);
        }
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn extents(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    /// Half of the box diagonal.
    pub fn radius(&self) -> f64 {
        let [lx, ly, lz] = self.extents();
        0.5 * (lx * lx + ly * ly + lz * lz).sqrt()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| self.min[d] <= p[d] && p[d] <= self.max[d])
    }

    pub fn is_degenerate(&self) -> bool {
        self.extents().iter().any(|&l| l < DEGENERATE_EXTENT)
    }
}

/// Set of dimensions a box is split along, as a bitmask (bit `d` = dimension `d`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitDims(u8);

impl SplitDims {
    pub fn from_dims(dims: &[usize]) -> Self {
        Self(dims.iter().fold(0, |m, &d| m | (1 << d)))
    }

    pub fn contains(self, dim: usize) -> bool {
        self.0 & (1 << dim) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Number of sub-boxes produced by splitting along these dimensions.
    pub fn num_children(self) -> usize {
        1 << self.count()
    }

    pub fn dims(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&d| self.contains(d))
    }
}

/// Dimensions whose extent exceeds `L_max / sqrt(2)`.
pub fn split_dimensions(bbox: &BoundingBox) -> Result<SplitDims> {
    let ext = bbox.extents();
    let longest = ext[0].max(ext[1]).max(ext[2]);
    if !(longest >= DEGENERATE_EXTENT) {
        return Err(BltcError::ZeroExtent);
    }
    let cutoff = longest / SQRT_2;
    let mask = (0..3).filter(|&d| ext[d] > cutoff).fold(0u8, |m, d| m | (1 << d));
    Ok(SplitDims(mask))
}

#[derive(Clone, Debug)]
struct Node {
    bbox: BoundingBox,
    particles: Range<usize>,
    children: Range<usize>,
    level: usize,
    split: Option<SplitDims>,
}

struct Partition {
    nodes: Vec<Node>,
    /// `order[i]` is the original index of the particle at permuted slot `i`.
    order: Vec<usize>,
}

fn partition(sys: &ParticleSystem, max_leaf: usize) -> Partition {
    let n = sys.len();
    let mut order: Vec<usize> = (0..n).collect();
    if n == 0 {
        return Partition {
            nodes: Vec::new(),
            order,
        };
    }
    let mut nodes = vec![Node {
        bbox: BoundingBox::around(sys, &order),
        particles: 0..n,
        children: 0..0,
        level: 0,
        split: None,
    }];
    let mut stack = vec![0usize];
    let mut codes: Vec<u8> = Vec::new();
    let mut scratch: Vec<usize> = Vec::new();

    while let Some(id) = stack.pop() {
        let Node {
            bbox, particles, level, ..
        } = nodes[id].clone();
        if particles.len() <= max_leaf {
            continue;
        }
        // all particles coincide: nothing to split
        let Ok(dims) = split_dimensions(&bbox) else {
            continue;
        };
        let mid = bbox.center();

        let slice = &mut order[particles.clone()];
        codes.clear();
        codes.extend(slice.iter().map(|&i| {
            let p = sys.position(i);
            dims.dims().fold(0u8, |c, d| c | (((p[d] > mid[d]) as u8) << d))
        }));
        let mut counts = [0usize; 8];
        codes.iter().for_each(|&c| counts[c as usize] += 1);
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            continue;
        }
        let mut offsets = [0usize; 8];
        for c in 1..8 {
            offsets[c] = offsets[c - 1] + counts[c - 1];
        }
        scratch.clear();
        scratch.resize(slice.len(), 0);
        let mut cursor = offsets;
        for (&i, &c) in slice.iter().zip(&codes) {
            scratch[cursor[c as usize]] = i;
            cursor[c as usize] += 1;
        }
        slice.copy_from_slice(&scratch);

        let first_child = nodes.len();
        for c in 0..8 {
            if counts[c] == 0 {
                continue;
            }
            let start = particles.start + offsets[c];
            let range = start..start + counts[c];
            nodes.push(Node {
                bbox: BoundingBox::around(sys, &order[range.clone()]),
                particles: range,
                children: 0..0,
                level: level + 1,
                split: None,
            });
        }
        let children = first_child..nodes.len();
        stack.extend(children.clone().rev());
        nodes[id].children = children;
        nodes[id].split = Some(dims);
    }
    Partition { nodes, order }
}

/// Read-only view of a cluster's metadata, shared by local clusters and
/// fetched remote records so the acceptance recursion runs on either.
pub trait ClusterNode {
    fn center(&self) -> [f64; 3];
    fn radius(&self) -> f64;
    fn num_particles(&self) -> usize;
    fn eligible(&self) -> bool;
    fn children(&self) -> Range<usize>;
    fn is_leaf(&self) -> bool {
        self.children().is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Cluster {
    /// Minimal box of the member particles.
    pub bbox: BoundingBox,
    pub particles: Range<usize>,
    pub children: Range<usize>,
    pub level: usize,
    /// Dimensions this cluster was split along (`None` for leaves).
    pub split: Option<SplitDims>,
    pub eligible: bool,
    /// Per-dimension Chebyshev grids on `bbox`.
    pub grid: [ChebyshevGrid1D; 3],
}

impl ClusterNode for Cluster {
    fn center(&self) -> [f64; 3] {
        self.bbox.center()
    }
    fn radius(&self) -> f64 {
        self.bbox.radius()
    }
    fn num_particles(&self) -> usize {
        self.particles.len()
    }
    fn eligible(&self) -> bool {
        self.eligible
    }
    fn children(&self) -> Range<usize> {
        self.children.clone()
    }
}

/// Flattened cluster metadata as published to other ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub bbox: BoundingBox,
    pub center: [f64; 3],
    pub radius: f64,
    pub num_particles: usize,
    pub eligible: bool,
    pub children: Range<usize>,
    pub particles: Range<usize>,
}

impl ClusterNode for ClusterRecord {
    fn center(&self) -> [f64; 3] {
        self.center
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn num_particles(&self) -> usize {
        self.num_particles
    }
    fn eligible(&self) -> bool {
        self.eligible
    }
    fn children(&self) -> Range<usize> {
        self.children.clone()
    }
}

#[derive(Clone, Debug)]
pub struct SourceTree {
    /// Cluster 0 is the root.
    pub clusters: Vec<Cluster>,
    /// Sources in tree order.
    pub sources: ParticleSystem,
    /// `order[i]` is the caller's index of permuted source `i`.
    pub order: Vec<usize>,
    pub degree: usize,
    pub leaf_size: usize,
}

impl SourceTree {
    pub fn root(&self) -> &Cluster {
        &self.clusters[0]
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_leaf())
    }

    pub fn depth(&self) -> usize {
        self.clusters.iter().map(|c| c.level).max().unwrap_or(0)
    }

    /// Original index -> permuted slot.
    pub fn inverse_order(&self) -> Vec<usize> {
        invert(&self.order)
    }

    pub fn tree_array(&self) -> Vec<ClusterRecord> {
        self.clusters
            .iter()
            .map(|c| ClusterRecord {
                bbox: c.bbox,
                center: c.center(),
                radius: c.radius(),
                num_particles: c.num_particles(),
                eligible: c.eligible,
                children: c.children.clone(),
                particles: c.particles.clone(),
            })
            .collect()
    }
}

pub(crate) fn invert(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (slot, &orig) in order.iter().enumerate() {
        inv[orig] = slot;
    }
    inv
}

pub fn cluster_grid(bbox: &BoundingBox, degree: usize) -> [ChebyshevGrid1D; 3] {
    std::array::from_fn(|d| ChebyshevGrid1D::new(degree, bbox.min[d], bbox.max[d]))
}

pub fn build_source_tree(sources: &ParticleSystem, leaf_size: usize, degree: usize) -> Result<SourceTree> {
    if leaf_size == 0 {
        return Err(BltcError::InvalidConfig("leaf size must be at least 1".into()));
    }
    if sources.is_empty() {
        return Err(BltcError::InvalidConfig("source tree needs at least one source".into()));
    }
    let Partition { nodes, order } = partition(sources, leaf_size);
    let clusters = nodes
        .into_iter()
        .map(|n| Cluster {
            eligible: !n.bbox.is_degenerate(),
            grid: cluster_grid(&n.bbox, degree),
            bbox: n.bbox,
            particles: n.particles,
            children: n.children,
            level: n.level,
            split: n.split,
        })
        .collect();
    Ok(SourceTree {
        clusters,
        sources: sources.gather(&order),
        order,
        degree,
        leaf_size,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetBatch {
    pub particles: Range<usize>,
    pub center: [f64; 3],
    pub radius: f64,
}

impl TargetBatch {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct TargetBatches {
    /// Ordered by starting index; ranges tile `0..targets.len()`.
    pub batches: Vec<TargetBatch>,
    /// Targets in batch order.
    pub targets: ParticleSystem,
    pub order: Vec<usize>,
}

impl TargetBatches {
    pub fn inverse_order(&self) -> Vec<usize> {
        invert(&self.order)
    }
}

/// Leaves of a target tree built with the source partitioner.
pub fn build_target_batches(targets: &ParticleSystem, batch_size: usize) -> Result<TargetBatches> {
    if batch_size == 0 {
        return Err(BltcError::InvalidConfig("batch size must be at least 1".into()));
    }
    let Partition { nodes, order } = partition(targets, batch_size);
    let mut batches: Vec<TargetBatch> = nodes
        .into_iter()
        .filter(|n| n.children.is_empty())
        .map(|n| TargetBatch {
            center: n.bbox.center(),
            radius: n.bbox.radius(),
            particles: n.particles,
        })
        .collect();
    batches.sort_by_key(|b| b.particles.start);
    Ok(TargetBatches {
        batches,
        targets: targets.gather(&order),
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbox(ext: [f64; 3]) -> BoundingBox {
        BoundingBox {
            min: [0.0; 3],
            max: ext,
        }
    }

    #[test]
    fn split_rule() {
        assert_eq!(
            split_dimensions(&bbox([1.0, 1.0, 1.0])).unwrap(),
            SplitDims::from_dims(&[0, 1, 2])
        );
        assert_eq!(split_dimensions(&bbox([1.0, 1.0, 1.0])).unwrap().num_children(), 8);
        let s = split_dimensions(&bbox([4.0, 1.0, 1.0])).unwrap();
        assert_eq!((s, s.num_children()), (SplitDims::from_dims(&[0]), 2));
        let s = split_dimensions(&bbox([4.0, 4.0, 1.0])).unwrap();
        assert_eq!((s, s.num_children()), (SplitDims::from_dims(&[0, 1]), 4));
        assert!(matches!(split_dimensions(&bbox([0.0; 3])), Err(BltcError::ZeroExtent)));
    }

    #[test]
    fn single_leaf_below_threshold() {
        let pts: Vec<[f64; 3]> = (0..1000).map(|i| [i as f64, (i * 7 % 13) as f64, 0.5]).collect();
        let sys = ParticleSystem::from_points(&pts, &vec![1.0; 1000]);
        let tree = build_source_tree(&sys, 2000, 4).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(tree.root().is_leaf());
    }

    #[test]
    fn cube_corners_give_eight_leaves() {
        let mut pts = Vec::new();
        for &x in &[-0.5, 0.5] {
            for &y in &[-0.5, 0.5] {
                for &z in &[-0.5, 0.5] {
                    pts.push([x, y, z]);
                }
            }
        }
        let sys = ParticleSystem::from_points(&pts, &[1.0; 8]);
        let tree = build_source_tree(&sys, 1, 2).unwrap();
        assert_eq!(tree.root().children, 1..9);
        for leaf in tree.leaves() {
            assert_eq!(leaf.num_particles(), 1);
            assert!(!leaf.eligible);
        }
        assert!(tree.root().eligible);
    }

    #[test]
    fn coincident_particles_stay_in_one_leaf() {
        let sys = ParticleSystem::from_points(&[[0.25; 3]; 10], &[1.0; 10]);
        let tree = build_source_tree(&sys, 2, 3).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(!tree.root().eligible);
    }

    #[test]
    fn one_target_one_batch() {
        let sys = ParticleSystem::from_points(&[[0.1, 0.2, 0.3]], &[1.0]);
        let b = build_target_batches(&sys, 10).unwrap();
        assert_eq!(
            b.batches,
            vec![TargetBatch {
                particles: 0..1,
                center: [0.1, 0.2, 0.3],
                radius: 0.0
            }]
        );
    }

    #[test]
    fn empty_targets_no_batches() {
        let b = build_target_batches(&ParticleSystem::default(), 10).unwrap();
        assert!(b.batches.is_empty());
    }

    #[test]
    fn bad_sizes_rejected() {
        let sys = ParticleSystem::from_points(&[[0.0; 3]], &[1.0]);
        assert!(build_source_tree(&sys, 0, 2).is_err());
        assert!(build_target_batches(&sys, 0).is_err());
        assert!(build_source_tree(&ParticleSystem::default(), 1, 2).is_err());
    }
}
