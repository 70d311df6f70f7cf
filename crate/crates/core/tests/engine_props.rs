use bltc::engine::{
    build_interaction_lists, compute_potentials, eval_batch_approx, eval_batch_direct, mac_accept, GridNodes,
    MacDecision, PotentialAccumulator,
};
use bltc::harness::{direct_sum_oracle, generate_particles, relative_error, rng_for};
use bltc::interp::chebyshev_points;
use bltc::moments::{compute_modified_charges, compute_tree_moments};
use bltc::tree::{build_source_tree, build_target_batches, ClusterNode};
use bltc::{run_treecode, EvalConfig, KernelSpec, ParticleSystem};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn every_source_is_covered_once_per_batch() {
    let sys = generate_particles(10_000, 42);
    let small_leaves = EvalConfig {
        leaf_size: 200,
        batch_size: 200,
        degree: 4,
        ..Default::default()
    };
    for config in [EvalConfig::default(), small_leaves] {
        let tree = build_source_tree(&sys, config.leaf_size, config.degree).unwrap();
        let batches = build_target_batches(&sys, config.batch_size).unwrap();
        let lists = build_interaction_lists(&batches.batches, &tree.clusters, &config);
        if config.leaf_size == 200 {
            assert!(lists.num_approx() > 0);
        }
        for (batch, l) in batches.batches.iter().zip(&lists.per_batch) {
            let mut count = vec![0u8; sys.len()];
            for &c in l.approx.iter().chain(&l.direct) {
                for j in tree.clusters[c].particles.clone() {
                    count[j] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 1));
            for &c in &l.approx {
                let cluster = &tree.clusters[c];
                assert_eq!(mac_accept(batch, cluster, &config), MacDecision::Accept);
                assert!(cluster.eligible && cluster.num_particles() > config.num_interp_points());
            }
        }
    }
}

fn cluster_in_box(n: usize, lo: f64, hi: f64, seed: u64) -> ParticleSystem {
    let mut rng = rng_for(seed, 0);
    let mut sys = ParticleSystem::with_capacity(n);
    for _ in 0..n {
        let p = [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)];
        sys.push(p, rng.gen_range(-1.0..=1.0));
    }
    sys
}

fn approx_and_direct(sources: &ParticleSystem, target: [f64; 3], degree: usize, kernel: KernelSpec) -> (f64, f64) {
    let tree = build_source_tree(sources, sources.len(), degree).unwrap();
    let q_hat = compute_modified_charges(&tree, 0).unwrap().q_hat;
    let t = ParticleSystem::from_points(&[target], &[0.0]);
    let mut approx = PotentialAccumulator::new(1);
    eval_batch_approx(
        t.view(),
        &GridNodes::new(&tree.clusters[0].grid),
        &q_hat,
        &kernel,
        &mut approx,
    );
    let mut direct = PotentialAccumulator::new(1);
    eval_batch_direct(t.view(), tree.sources.view(), &kernel, &mut direct);
    (approx.value(0), direct.value(0))
}

#[test]
fn far_field_approximation() {
    let sources = cluster_in_box(5000, 0.4, 0.6, 11);
    let (a, d) = approx_and_direct(&sources, [5.0, 5.0, 5.0], 8, KernelSpec::coulomb());
    assert!(((a - d) / d).abs() <= 1e-9, "relative error {}", ((a - d) / d).abs());
}

#[test]
fn constant_kernel_reproduces_total_charge() {
    let sources = cluster_in_box(3000, -0.3, 0.2, 12);
    let (a, d) = approx_and_direct(&sources, [0.7, -0.1, 0.0], 8, KernelSpec::test_constant());
    let scale: f64 = sources.q.iter().map(|q| q.abs()).sum();
    assert!((a - d).abs() <= 1e-12 * scale);
}

#[test]
fn node_source_gives_exact_approximation() {
    let degree = 5;
    let nodes = chebyshev_points(degree, 0.0, 1.0);
    let mut sources = ParticleSystem::default();
    sources.push([0.0; 3], 0.0);
    sources.push([1.0; 3], 0.0);
    sources.push([nodes[2], nodes[4], nodes[1]], 2.5);
    for kernel in [KernelSpec::coulomb(), KernelSpec::yukawa(0.5)] {
        let (a, d) = approx_and_direct(&sources, [3.0, -2.0, 4.0], degree, kernel);
        assert_eq!(a, d);
    }
}

#[test]
fn two_particles_equal_oracle() {
    let sys = ParticleSystem::from_points(&[[0.1, 0.2, 0.3], [-0.4, 0.9, 0.0]], &[0.7, -1.3]);
    let run = run_treecode(&sys, &sys, &EvalConfig::default()).unwrap();
    assert_eq!(run.potentials, direct_sum_oracle(&sys, &KernelSpec::coulomb(), None));
}

#[test]
fn tiny_theta_matches_oracle_per_target() {
    let sys = generate_particles(3000, 5);
    for kernel in [KernelSpec::coulomb(), KernelSpec::yukawa(0.5)] {
        let config = EvalConfig {
            theta: 1e-9,
            leaf_size: 100,
            batch_size: 100,
            kernel,
            ..Default::default()
        };
        let run = run_treecode(&sys, &sys, &config).unwrap();
        assert_eq!(run.counts.approx_pairs, 0);
        let ds = direct_sum_oracle(&sys, &kernel, None);
        for (a, b) in run.potentials.iter().zip(&ds) {
            assert!(((a - b) / b).abs() <= 1e-13);
        }
    }
}

#[test]
fn error_shrinks_with_degree() {
    let sys = generate_particles(8000, 6);
    let ds = direct_sum_oracle(&sys, &KernelSpec::coulomb(), None);
    let errors: Vec<f64> = [1, 3, 5, 7]
        .iter()
        .map(|&degree| {
            let config = EvalConfig {
                theta: 0.5,
                degree,
                leaf_size: 50,
                batch_size: 50,
                ..Default::default()
            };
            relative_error(&ds, &run_treecode(&sys, &sys, &config).unwrap().potentials).unwrap()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn deterministic_across_thread_counts() {
    let sys = generate_particles(20_000, 8);
    let config = EvalConfig {
        leaf_size: 500,
        batch_size: 500,
        ..Default::default()
    };
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_treecode(&sys, &sys, &config).unwrap())
    };
    let base = run_with(1);
    for threads in [1, 2, 4] {
        let other = run_with(threads);
        assert_eq!(other.counts, base.counts);
        assert!(other
            .potentials
            .iter()
            .zip(&base.potentials)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn separate_targets_and_sources() {
    let sources = generate_particles(4000, 1);
    let targets = generate_particles(700, 2);
    let config = EvalConfig {
        leaf_size: 200,
        batch_size: 100,
        degree: 6,
        ..Default::default()
    };
    let tree = build_source_tree(&sources, config.leaf_size, config.degree).unwrap();
    let batches = build_target_batches(&targets, config.batch_size).unwrap();
    let lists = build_interaction_lists(&batches.batches, &tree.clusters, &config);
    let phi = compute_potentials(&batches, &tree, &compute_tree_moments(&tree), &lists, &config);
    assert_eq!(phi, run_treecode(&targets, &sources, &config).unwrap().potentials);

    let mut exact = vec![0.0; targets.len()];
    for (i, e) in exact.iter_mut().enumerate() {
        let t = ParticleSystem::from_points(&[targets.position(i)], &[0.0]);
        let mut acc = PotentialAccumulator::new(1);
        eval_batch_direct(t.view(), sources.view(), &config.kernel, &mut acc);
        *e = acc.value(0);
    }
    assert!(relative_error(&exact, &phi).unwrap() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_random_systems_are_accurate(
        seed in any::<u64>(),
        n in 2usize..1500,
        theta in 0.3f64..0.9,
        degree in 4usize..9,
        leaf in 16usize..200,
    ) {
        let sys = generate_particles(n, seed);
        let config = EvalConfig { theta, degree, leaf_size: leaf, batch_size: leaf, ..Default::default() };
        let run = run_treecode(&sys, &sys, &config).unwrap();
        let ds = direct_sum_oracle(&sys, &config.kernel, None);
        prop_assert!(relative_error(&ds, &run.potentials).unwrap() < 1e-3);
        prop_assert!(run.counts.direct_pairs <= (n * n) as u64);
    }
}
