use serde::{Deserialize, Serialize};

use crate::error::{BltcError, Result};
use crate::particles::ParticleSystem;
use crate::tree::BoundingBox;

/// Node of the bisection tree. Leaves own one rank each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RcbNode {
    Leaf {
        rank: usize,
    },
    Split {
        axis: usize,
        /// Coordinate of the first particle on the upper side. Particles at
        /// exactly this coordinate may fall on either side, decided by index.
        cut: f64,
        lower: Box<RcbNode>,
        upper: Box<RcbNode>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcbPartition {
    /// Owning rank of every particle, in the caller's order.
    pub rank_of: Vec<usize>,
    /// Slab of each rank, cut out of the bounding box of all particles.
    pub regions: Vec<BoundingBox>,
    pub cuts: RcbNode,
}

impl RcbPartition {
    pub fn num_ranks(&self) -> usize {
        self.regions.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_ranks()];
        for &r in &self.rank_of {
            counts[r] += 1;
        }
        counts
    }

    /// Caller indices owned by each rank, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_ranks()];
        for (i, &r) in self.rank_of.iter().enumerate() {
            members[r].push(i);
        }
        members
    }
}

/// Recursive coordinate bisection into `ranks` parts whose particle counts
/// differ by at most one.
///
/// A group of `r` ranks holding `n` particles is split into `r/2` and
/// `r - r/2` ranks along the longest extent of the group's bounding box (ties
/// go to the lower axis). The lower group gets the `r_lo*b + min(e, r_lo)`
/// smallest coordinates, where `n = r*b + e`, ordered by (coordinate, index).
pub fn rcb_partition(particles: &ParticleSystem, ranks: usize) -> Result<RcbPartition> {
    let n = particles.len();
    if ranks == 0 || n < ranks {
        return Err(BltcError::InvalidConfig(format!(
            "cannot split {n} particles over {ranks} ranks"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let all = BoundingBox::around(particles, &idx);
    let mut part = RcbPartition {
        rank_of: vec![0; n],
        regions: vec![all; ranks],
        cuts: RcbNode::Leaf { rank: 0 },
    };
    part.cuts = bisect(particles, &mut idx, 0..ranks, all, &mut part);
    Ok(part)
}

fn bisect(
    sys: &ParticleSystem,
    idx: &mut [usize],
    ranks: std::ops::Range<usize>,
    region: BoundingBox,
    part: &mut RcbPartition,
) -> RcbNode {
    let r = ranks.len();
    if r == 1 {
        for &i in idx.iter() {
            part.rank_of[i] = ranks.start;
        }
        part.regions[ranks.start] = region;
        return RcbNode::Leaf { rank: ranks.start };
    }
    let n = idx.len();
    let (b, e) = (n / r, n % r);
    let r_lo = r / 2;
    let n_lo = r_lo * b + e.min(r_lo);

    let ext = BoundingBox::around(sys, idx).extents();
    let axis = (0..3).fold(0, |best, d| if ext[d] > ext[best] { d } else { best });
    let coord = sys.coord(axis);
    let key = |&i: &usize| (coord[i], i);
    idx.select_nth_unstable_by(n_lo, |a, b| {
        let (ca, ia) = key(a);
        let (cb, ib) = key(b);
        ca.total_cmp(&cb).then(ia.cmp(&ib))
    });
    let cut = coord[idx[n_lo]];

    let (mut lo_region, mut hi_region) = (region, region);
    lo_region.max[axis] = cut;
    hi_region.min[axis] = cut;
    let mid = ranks.start + r_lo;
    let (lo_idx, hi_idx) = idx.split_at_mut(n_lo);
    let lower = bisect(sys, lo_idx, ranks.start..mid, lo_region, part);
    let upper = bisect(sys, hi_idx, mid..ranks.end, hi_region, part);
    RcbNode::Split {
        axis,
        cut,
        lower: Box::new(lower),
        upper: Box::new(upper),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate_particles;

    #[test]
    fn cube_corners_two_ranks() {
        let pts: Vec<[f64; 3]> = (0..8).map(|c| std::array::from_fn(|d| ((c >> d) & 1) as f64)).collect();
        let sys = ParticleSystem::from_points(&pts, &[1.0; 8]);
        let p = rcb_partition(&sys, 2).unwrap();
        assert_eq!(p.counts(), vec![4, 4]);
        let RcbNode::Split { axis, lower, upper, .. } = &p.cuts else {
            panic!("expected a split")
        };
        assert_eq!(*axis, 0);
        assert!(matches!(**lower, RcbNode::Leaf { rank: 0 }));
        assert!(matches!(**upper, RcbNode::Leaf { rank: 1 }));
        for (i, &r) in p.rank_of.iter().enumerate() {
            assert_eq!(r, i & 1);
        }
    }

    #[test]
    fn uniform_square_four_quadrants() {
        // 20 x 20 grid in the plane z = 0
        let pts: Vec<[f64; 3]> = (0..400)
            .map(|i| [(i % 20) as f64 / 19.0, (i / 20) as f64 / 19.0, 0.0])
            .collect();
        let sys = ParticleSystem::from_points(&pts, &[1.0; 400]);
        let p = rcb_partition(&sys, 4).unwrap();
        assert_eq!(p.counts(), vec![100; 4]);
        for (i, &r) in p.rank_of.iter().enumerate() {
            let quadrant = usize::from(pts[i][0] > 0.5) * 2 + usize::from(pts[i][1] > 0.5);
            assert_eq!(r, quadrant);
        }
    }

    #[test]
    fn six_ranks_balance() {
        let sys = generate_particles(100_000, 42);
        let counts = rcb_partition(&sys, 6).unwrap().counts();
        assert!(counts.iter().all(|&c| c == 16666 || c == 16667), "{counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), 100_000);
    }

    #[test]
    fn too_few_particles() {
        let sys = generate_particles(3, 1);
        assert!(rcb_partition(&sys, 4).is_err());
        assert!(rcb_partition(&sys, 0).is_err());
    }

    #[test]
    fn duplicate_coordinates_still_balance() {
        let pts = vec![[0.5; 3]; 11];
        let sys = ParticleSystem::from_points(&pts, &[1.0; 11]);
        let counts = rcb_partition(&sys, 3).unwrap().counts();
        assert_eq!(counts, vec![4, 4, 3]);
    }
}
