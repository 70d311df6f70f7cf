//! Treecode evaluation: acceptance criterion, interaction lists, and the
//! batch-parallel potential computation.
//!
//! Lists are fully built before any kernel runs. Evaluation is one task per
//! target batch; each task owns its batch's output slice, so results do not
//! depend on scheduling. Within a batch the approximation list is applied
//! first, then the direct list, each in list order.

mod eval;
mod lists;
mod mac;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eval::{eval_batch_approx, eval_batch_direct, GridNodes, PotentialAccumulator};
pub use lists::{batch_lists, build_interaction_lists, BatchLists, InteractionCounts, InteractionLists};
pub use mac::{mac_accept, MacDecision, MacFailure};

use crate::error::{BltcError, Result};
use crate::kernels::KernelSpec;
use crate::moments::{compute_tree_moments, TreeMoments};
use crate::particles::{ParticleSlice, ParticleSystem};
use crate::tree::{build_source_tree, build_target_batches, SourceTree, TargetBatch, TargetBatches};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Acceptance parameter, in `(0, 1]`.
    pub theta: f64,
    /// Interpolation degree `n`; each cluster grid has `(n+1)^3` nodes.
    pub degree: usize,
    pub leaf_size: usize,
    pub batch_size: usize,
    pub kernel: KernelSpec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            theta: 0.8,
            degree: 8,
            leaf_size: 2000,
            batch_size: 2000,
            kernel: KernelSpec::coulomb(),
        }
    }
}

impl EvalConfig {
    pub fn num_interp_points(&self) -> usize {
        (self.degree + 1).pow(3)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(BltcError::InvalidConfig(format!(
                "theta must be in (0, 1], got {}",
                self.theta
            )));
        }
        if self.leaf_size == 0 || self.batch_size == 0 {
            return Err(BltcError::InvalidConfig(
                "leaf and batch sizes must be at least 1".into(),
            ));
        }
        self.kernel.validate()
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    /// Tree, batches, interaction lists (and remote fetches when distributed).
    pub setup_s: f64,
    /// Modified charges.
    pub precompute_s: f64,
    /// Potential evaluation.
    pub compute_s: f64,
    pub total_s: f64,
}

/// Carves `out` into one mutable slice per batch. Batches must tile `out`
/// in order.
pub(crate) fn split_by_batches<'a>(mut out: &'a mut [f64], batches: &[TargetBatch]) -> Vec<&'a mut [f64]> {
    let mut slices = Vec::with_capacity(batches.len());
    for b in batches {
        let (head, tail) = std::mem::take(&mut out).split_at_mut(b.len());
        slices.push(head);
        out = tail;
    }
    slices
}

/// Applies one batch's lists against a local tree.
pub(crate) fn eval_lists(
    targets: ParticleSlice<'_>,
    lists: &BatchLists,
    tree: &SourceTree,
    moments: &TreeMoments,
    kernel: &KernelSpec,
    acc: &mut PotentialAccumulator,
) {
    for &c in &lists.approx {
        let q_hat = moments.get(c).expect("approximated cluster has moments");
        eval_batch_approx(targets, &GridNodes::new(&tree.clusters[c].grid), q_hat, kernel, acc);
    }
    for &c in &lists.direct {
        eval_batch_direct(
            targets,
            tree.sources.slice(tree.clusters[c].particles.clone()),
            kernel,
            acc,
        );
    }
}

/// Potentials at every target, returned in the caller's original target order.
pub fn compute_potentials(
    batches: &TargetBatches,
    tree: &SourceTree,
    moments: &TreeMoments,
    lists: &InteractionLists,
    config: &EvalConfig,
) -> Vec<f64> {
    let mut permuted = vec![0.0; batches.targets.len()];
    split_by_batches(&mut permuted, &batches.batches)
        .into_par_iter()
        .zip(batches.batches.par_iter())
        .zip(lists.per_batch.par_iter())
        .for_each(|((out, batch), l)| {
            let targets = batches.targets.slice(batch.particles.clone());
            let mut acc = PotentialAccumulator::new(batch.len());
            eval_lists(targets, l, tree, moments, &config.kernel, &mut acc);
            acc.write_to(out);
        });
    unpermute(&permuted, &batches.order)
}

pub(crate) fn unpermute(permuted: &[f64], order: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; permuted.len()];
    for (&v, &orig) in permuted.iter().zip(order) {
        out[orig] = v;
    }
    out
}

#[derive(Clone, Debug)]
pub struct TreecodeRun {
    pub potentials: Vec<f64>,
    pub times: PhaseTimes,
    pub counts: InteractionCounts,
}

/// Full single-domain pipeline: build, precompute, evaluate.
pub fn run_treecode(targets: &ParticleSystem, sources: &ParticleSystem, config: &EvalConfig) -> Result<TreecodeRun> {
    config.validate()?;
    if targets.is_empty() {
        return Ok(TreecodeRun {
            potentials: Vec::new(),
            times: PhaseTimes::default(),
            counts: InteractionCounts::default(),
        });
    }
    let start = Instant::now();
    let tree = build_source_tree(sources, config.leaf_size, config.degree)?;
    let batches = build_target_batches(targets, config.batch_size)?;
    let lists = build_interaction_lists(&batches.batches, &tree.clusters, config);
    let setup_s = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let moments = compute_tree_moments(&tree);
    let precompute_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let potentials = compute_potentials(&batches, &tree, &moments, &lists, config);
    let compute_s = t.elapsed().as_secs_f64();

    let counts = lists.counts(&batches.batches, &tree.clusters, config.degree);
    let total_s = start.elapsed().as_secs_f64();
    Ok(TreecodeRun {
        potentials,
        times: PhaseTimes {
            setup_s,
            precompute_s,
            compute_s,
            total_s,
        },
        counts,
    })
}
