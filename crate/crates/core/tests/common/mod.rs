#![allow(dead_code)]

use bltc::interp::{chebyshev_points, lagrange_basis_all};
use bltc::tree::{build_source_tree, SourceTree};
use bltc::ParticleSystem;
use rand::Rng;

/// Relative deviation `max |a - b| / max |b|`.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Sources of a single-cluster tree with box `[lo, hi]`. Two zero-charge
/// anchors sit on opposite corners so the minimal box is exactly that box.
pub fn cluster_sources<R: Rng>(rng: &mut R, size: usize, degree: usize, on_nodes: bool) -> ParticleSystem {
    let lo: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
    let hi: [f64; 3] = std::array::from_fn(|d| lo[d] + rng.gen_range(0.05..3.0));
    let nodes: [Vec<f64>; 3] = std::array::from_fn(|d| chebyshev_points(degree, lo[d], hi[d]));
    let mut sys = ParticleSystem::with_capacity(size + 2);
    sys.push(lo, 0.0);
    sys.push(hi, 0.0);
    for _ in 0..size {
        let mut p: [f64; 3] = std::array::from_fn(|d| rng.gen_range(lo[d]..=hi[d]));
        if on_nodes && rng.gen_bool(0.3) {
            // 1, 2 or 3 coordinates exactly on grid nodes
            for d in 0..3 {
                if rng.gen_bool(0.5) {
                    p[d] = nodes[d][rng.gen_range(0..=degree)];
                }
            }
        }
        sys.push(p, rng.gen_range(-1.0..=1.0));
    }
    sys
}

pub fn single_cluster_tree(sys: &ParticleSystem, degree: usize) -> SourceTree {
    let tree = build_source_tree(sys, sys.len(), degree).unwrap();
    assert_eq!(tree.len(), 1);
    tree
}

/// Modified charges straight from the definition, with the 1D basis values
/// from `lagrange_basis_all`.
pub fn reference_moments(tree: &SourceTree) -> Vec<f64> {
    let c = &tree.clusters[0];
    let m = tree.degree + 1;
    let mut q_hat = vec![0.0; m * m * m];
    for j in c.particles.clone() {
        let y = tree.sources.position(j);
        let l: [Vec<f64>; 3] = std::array::from_fn(|d| lagrange_basis_all(&c.grid[d], y[d]).unwrap());
        for k1 in 0..m {
            for k2 in 0..m {
                for k3 in 0..m {
                    q_hat[(k1 * m + k2) * m + k3] += l[0][k1] * l[1][k2] * l[2][k3] * tree.sources.q[j];
                }
            }
        }
    }
    q_hat
}
