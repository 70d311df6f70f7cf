//! Modified charges on each cluster's tensor-product Chebyshev grid.
//!
//! Computed in two stages: a per-source scaling `q~_j = q_j / (D_1 D_2 D_3)`
//! with `D_l = sum_k w_k / (y_jl - s_k)`, followed by the accumulation
//! `q^_k = sum_j prod_l [w_{k_l} / (y_jl - s_{k_l})] q~_j`. A coordinate lying
//! on a grid node bypasses that dimension's denominator and contributes a
//! Kronecker delta instead of the barycentric factor.

use rayon::prelude::*;

use crate::error::{BltcError, Result};
use crate::interp::ChebyshevGrid1D;
use crate::particles::ParticleSystem;
use crate::tree::{Cluster, SourceTree};

/// Stage-one output for a single source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intermediate {
    pub q_tilde: f64,
    /// Node index per dimension when the coordinate sits on a node.
    pub coincident: [Option<usize>; 3],
}

pub fn compute_intermediate(cluster: &Cluster, sources: &ParticleSystem) -> Result<Vec<Intermediate>> {
    if !cluster.eligible {
        return Err(BltcError::InvalidConfig(
            "intermediate charges need an eligible cluster".into(),
        ));
    }
    let mut terms = vec![0.0; cluster.grid[0].num_points()];
    Ok(cluster
        .particles
        .clone()
        .map(|j| intermediate_one(&cluster.grid, sources.position(j), sources.q[j], &mut terms))
        .collect())
}

#[inline]
fn intermediate_one(grid: &[ChebyshevGrid1D; 3], y: [f64; 3], q: f64, terms: &mut [f64]) -> Intermediate {
    let mut coincident = [None; 3];
    let mut denom = 1.0;
    for d in 0..3 {
        match grid[d].barycentric_terms(y[d], terms) {
            Ok(sum) => denom *= sum,
            Err(k) => coincident[d] = Some(k),
        }
    }
    Intermediate {
        q_tilde: q / denom,
        coincident,
    }
}

/// Modified charges of one cluster, indexed `(k1 * (n+1) + k2) * (n+1) + k3`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMoments {
    pub cluster: usize,
    pub q_hat: Vec<f64>,
}

pub fn compute_modified_charges(tree: &SourceTree, cluster: usize) -> Result<ClusterMoments> {
    let c = &tree.clusters[cluster];
    if !c.eligible {
        return Err(BltcError::IneligibleCluster { cluster });
    }
    Ok(ClusterMoments {
        cluster,
        q_hat: modified_charges(c, &tree.sources),
    })
}

fn modified_charges(c: &Cluster, sources: &ParticleSystem) -> Vec<f64> {
    let m = c.grid[0].num_points();
    let mut q_hat = vec![0.0; m * m * m];
    let mut factors = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut terms = vec![0.0; m];

    for j in c.particles.clone() {
        let y = sources.position(j);
        let stage_one = intermediate_one(&c.grid, y, sources.q[j], &mut terms);
        for d in 0..3 {
            let f = &mut factors[d];
            match stage_one.coincident[d] {
                Some(k) => {
                    f.iter_mut().for_each(|v| *v = 0.0);
                    f[k] = 1.0;
                }
                None => {
                    let g = &c.grid[d];
                    for ((v, &w), &s) in f.iter_mut().zip(&g.weights).zip(&g.points) {
                        *v = w / (y[d] - s);
                    }
                }
            }
        }
        factors[2].iter_mut().for_each(|v| *v *= stage_one.q_tilde);
        let [f1, f2, f3] = &factors;
        for (k1, &a1) in f1.iter().enumerate() {
            if a1 == 0.0 {
                continue;
            }
            for (k2, &a2) in f2.iter().enumerate() {
                let a12 = a1 * a2;
                let row = &mut q_hat[(k1 * m + k2) * m..(k1 * m + k2 + 1) * m];
                for (out, &a3) in row.iter_mut().zip(f3) {
                    *out += a12 * a3;
                }
            }
        }
    }
    q_hat
}

/// Moments for every eligible cluster of a tree.
#[derive(Clone, Debug, Default)]
pub struct TreeMoments {
    pub degree: usize,
    per_cluster: Vec<Option<Vec<f64>>>,
}

impl TreeMoments {
    pub fn get(&self, cluster: usize) -> Option<&[f64]> {
        self.per_cluster.get(cluster).and_then(|m| m.as_deref())
    }

    pub fn len(&self) -> usize {
        self.per_cluster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_cluster.is_empty()
    }

    pub fn num_computed(&self) -> usize {
        self.per_cluster.iter().filter(|m| m.is_some()).count()
    }
}

pub fn compute_tree_moments(tree: &SourceTree) -> TreeMoments {
    let per_cluster = tree
        .clusters
        .par_iter()
        .map(|c| c.eligible.then(|| modified_charges(c, &tree.sources)))
        .collect();
    TreeMoments {
        degree: tree.degree,
        per_cluster,
    }
}

/// Operation counts of the two stages for one cluster: `((n+1) N_C, (n+1)^3 N_C)`.
pub fn moment_cost(degree: usize, num_particles: usize) -> (u64, u64) {
    let m = (degree + 1) as u64;
    let nc = num_particles as u64;
    (m * nc, m * m * m * nc)
}
