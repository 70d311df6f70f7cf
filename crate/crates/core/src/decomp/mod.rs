//! In-process simulation of the multi-rank treecode.
//!
//! Particles are split over ranks by recursive coordinate bisection. Each rank
//! builds its own tree and moments and publishes them in a write-once window.
//! After the publish barrier every rank builds its locally essential tree by
//! one-sided gets and evaluates its targets without further communication:
//! its own tree first, then each remote rank in rank order.
//!
//! Ranks run as concurrent rayon tasks. Each phase is a parallel pass over
//! the ranks; the barrier is the boundary between passes.

mod essential;
mod rcb;
mod window;

use std::time::Instant;

use rayon::prelude::*;

pub use essential::{
    build_let, eval_remote, FetchStats, LetAudit, LocallyEssentialTree, RemoteData, RemoteSource, WindowRemote,
};
pub use rcb::{rcb_partition, RcbNode, RcbPartition};
pub use window::{Window, WindowBoard};

use crate::engine::{
    build_interaction_lists, eval_lists, split_by_batches, unpermute, EvalConfig, InteractionCounts, InteractionLists,
    PhaseTimes, PotentialAccumulator,
};
use crate::error::Result;
use crate::moments::{compute_tree_moments, TreeMoments};
use crate::particles::ParticleSystem;
use crate::tree::{build_source_tree, build_target_batches, BoundingBox, SourceTree, TargetBatches};

/// One rank's share of the problem.
#[derive(Clone, Debug)]
pub struct RankDomain {
    pub rank: usize,
    pub region: BoundingBox,
    /// Caller indices of the owned particles, ascending.
    pub members: Vec<usize>,
    /// Owned particles, in `members` order. They are both targets and sources.
    pub particles: ParticleSystem,
    pub tree: SourceTree,
    pub batches: TargetBatches,
    pub moments: TreeMoments,
}

impl RankDomain {
    pub fn window(&self) -> Window {
        Window {
            tree_array: self.tree.tree_array(),
            sources: self.tree.sources.clone(),
            moments: self.moments.clone(),
        }
    }
}

/// Makes the rank's tree array, sources and moments readable by all ranks.
pub fn publish_windows(domain: &RankDomain, board: &WindowBoard) -> Result<()> {
    if board.num_ranks() == 1 {
        return Ok(());
    }
    board.publish(domain.rank, domain.window())
}

/// Where remote data is read from during evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemoteAccess {
    /// Only what the LET fetched.
    Let,
    /// Directly from the published windows, with the same interaction lists.
    Windows,
}

#[derive(Clone, Debug)]
pub struct DistributedRun {
    /// In the caller's particle order.
    pub potentials: Vec<f64>,
    /// Wall-clock time of each phase across all ranks.
    pub times: PhaseTimes,
    pub rank_times: Vec<PhaseTimes>,
    pub counts: InteractionCounts,
    pub partition: RcbPartition,
    /// One entry per ordered pair of distinct ranks.
    pub fetch_stats: Vec<FetchStats>,
    pub audit: LetAudit,
}

impl DistributedRun {
    pub fn rank_counts(&self) -> Vec<usize> {
        self.partition.counts()
    }
}

pub fn run_distributed(particles: &ParticleSystem, ranks: usize, config: &EvalConfig) -> Result<DistributedRun> {
    run_distributed_with(particles, ranks, config, RemoteAccess::Let)
}

/// Everything up to evaluation: partition, per-rank trees and moments,
/// published windows, and the locally essential trees.
#[derive(Debug)]
pub struct DistributedPlan {
    pub partition: RcbPartition,
    pub domains: Vec<RankDomain>,
    pub board: WindowBoard,
    pub lets: Vec<LocallyEssentialTree>,
    /// Setup and precompute filled in; compute is left at zero.
    pub times: PhaseTimes,
    pub rank_times: Vec<PhaseTimes>,
}

impl DistributedPlan {
    /// One entry per ordered pair of distinct ranks.
    pub fn fetch_stats(&self) -> Vec<FetchStats> {
        self.lets.iter().flat_map(|lt| lt.stats.iter().copied()).collect()
    }

    pub fn audit(&self) -> LetAudit {
        let mut audit = LetAudit::default();
        for lt in &self.lets {
            audit += lt.audit();
        }
        audit
    }

    /// Kernel evaluations the plan will perform.
    pub fn counts(&self, degree: usize) -> InteractionCounts {
        let mut counts = InteractionCounts::default();
        for (d, lt) in self.domains.iter().zip(&self.lets) {
            counts += lt.local.counts(&d.batches.batches, &d.tree.clusters, degree);
            for r in &lt.remote {
                counts += InteractionLists {
                    per_batch: r.lists.clone(),
                }
                .counts(&d.batches.batches, &r.tree_array, degree);
            }
        }
        counts
    }
}

pub fn plan_distributed(particles: &ParticleSystem, ranks: usize, config: &EvalConfig) -> Result<DistributedPlan> {
    config.validate()?;
    let partition = rcb_partition(particles, ranks)?;

    // setup: local trees and batches
    let t = Instant::now();
    let built: Vec<(RankDomain, f64)> = partition
        .members()
        .into_par_iter()
        .enumerate()
        .map(|(rank, members)| {
            let t = Instant::now();
            let local = particles.gather(&members);
            let tree = build_source_tree(&local, config.leaf_size, config.degree)?;
            let batches = build_target_batches(&local, config.batch_size)?;
            let domain = RankDomain {
                rank,
                region: partition.regions[rank],
                members,
                particles: local,
                tree,
                batches,
                moments: TreeMoments::default(),
            };
            Ok((domain, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let build_s = t.elapsed().as_secs_f64();
    let mut rank_times: Vec<PhaseTimes> = built
        .iter()
        .map(|(_, s)| PhaseTimes {
            setup_s: *s,
            ..Default::default()
        })
        .collect();
    let mut domains: Vec<RankDomain> = built.into_iter().map(|(d, _)| d).collect();

    // precompute: moments, then publish
    let board = WindowBoard::new(ranks);
    let t = Instant::now();
    let pre: Vec<f64> = domains
        .par_iter_mut()
        .map(|d| {
            let t = Instant::now();
            d.moments = compute_tree_moments(&d.tree);
            let s = t.elapsed().as_secs_f64();
            publish_windows(d, &board).map(|_| s)
        })
        .collect::<Result<_>>()?;
    let precompute_s = t.elapsed().as_secs_f64();
    for (rt, s) in rank_times.iter_mut().zip(pre) {
        rt.precompute_s = s;
    }
    if ranks > 1 {
        board.seal()?;
    }

    // setup: locally essential trees
    let t = Instant::now();
    let built: Vec<(LocallyEssentialTree, f64)> = domains
        .par_iter()
        .map(|d| {
            let t = Instant::now();
            let local = build_interaction_lists(&d.batches.batches, &d.tree.clusters, config);
            let lt = build_let(d.rank, &d.batches.batches, local, &board, config)?;
            Ok((lt, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let let_s = t.elapsed().as_secs_f64();
    let mut lets = Vec::with_capacity(ranks);
    for (rt, (lt, s)) in rank_times.iter_mut().zip(built) {
        rt.setup_s += s;
        lets.push(lt);
    }
    let times = PhaseTimes {
        setup_s: build_s + let_s,
        precompute_s,
        ..Default::default()
    };
    Ok(DistributedPlan {
        partition,
        domains,
        board,
        lets,
        times,
        rank_times,
    })
}

pub fn run_distributed_with(
    particles: &ParticleSystem,
    ranks: usize,
    config: &EvalConfig,
    access: RemoteAccess,
) -> Result<DistributedRun> {
    let start = Instant::now();
    let plan = plan_distributed(particles, ranks, config)?;

    let t = Instant::now();
    let evaluated: Vec<(Vec<f64>, f64)> = plan
        .domains
        .par_iter()
        .zip(&plan.lets)
        .map(|(d, lt)| {
            let t = Instant::now();
            let phi = match access {
                RemoteAccess::Let => evaluate_rank(d, lt, &lt.remote, config)?,
                RemoteAccess::Windows => {
                    let remotes: Vec<WindowRemote<'_>> = lt
                        .remote
                        .iter()
                        .map(|r| WindowRemote {
                            rank: r.rank,
                            board: &plan.board,
                            tree_array: &r.tree_array,
                            lists: &r.lists,
                        })
                        .collect();
                    evaluate_rank(d, lt, &remotes, config)?
                }
            };
            Ok((phi, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let compute_s = t.elapsed().as_secs_f64();

    let mut potentials = vec![0.0; particles.len()];
    let mut rank_times = plan.rank_times.clone();
    for ((d, (phi, s)), rt) in plan.domains.iter().zip(evaluated).zip(rank_times.iter_mut()) {
        for (&g, v) in d.members.iter().zip(phi) {
            potentials[g] = v;
        }
        rt.compute_s = s;
        rt.total_s = rt.setup_s + rt.precompute_s + rt.compute_s;
    }
    let times = PhaseTimes {
        compute_s,
        total_s: start.elapsed().as_secs_f64(),
        ..plan.times
    };
    Ok(DistributedRun {
        potentials,
        times,
        rank_times,
        counts: plan.counts(config.degree),
        fetch_stats: plan.fetch_stats(),
        audit: plan.audit(),
        partition: plan.partition,
    })
}

/// Potentials of one rank's targets, in `members` order.
fn evaluate_rank<S: RemoteSource>(
    d: &RankDomain,
    lt: &LocallyEssentialTree,
    remotes: &[S],
    config: &EvalConfig,
) -> Result<Vec<f64>> {
    let batches = &d.batches;
    let mut permuted = vec![0.0; batches.targets.len()];
    split_by_batches(&mut permuted, &batches.batches)
        .into_par_iter()
        .zip(batches.batches.par_iter())
        .enumerate()
        .try_for_each(|(b, (out, batch))| {
            let targets = batches.targets.slice(batch.particles.clone());
            let mut acc = PotentialAccumulator::new(batch.len());
            eval_lists(
                targets,
                &lt.local.per_batch[b],
                &d.tree,
                &d.moments,
                &config.kernel,
                &mut acc,
            );
            for r in remotes {
                eval_remote(targets, &r.lists()[b], r, config.degree, &config.kernel, &mut acc)?;
            }
            acc.write_to(out);
            Ok::<(), crate::error::BltcError>(())
        })?;
    Ok(unpermute(&permuted, &batches.order))
}
