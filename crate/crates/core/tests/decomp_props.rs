use bltc::decomp::{plan_distributed, rcb_partition, run_distributed, run_distributed_with, RemoteAccess, WindowBoard};
use bltc::harness::{generate_particles, rng_for};
use bltc::{BltcError, EvalConfig, ParticleSystem};
use proptest::prelude::*;
use rand::Rng;

fn small_config() -> EvalConfig {
    EvalConfig {
        theta: 0.7,
        degree: 3,
        leaf_size: 60,
        batch_size: 60,
        ..Default::default()
    }
}

fn two_blobs(n: usize, gap: f64, seed: u64) -> ParticleSystem {
    let mut rng = rng_for(seed, 0);
    let mut sys = ParticleSystem::with_capacity(n);
    for i in 0..n {
        let off = if i % 2 == 0 { 0.0 } else { gap };
        sys.push([off + rng.gen::<f64>(), rng.gen(), rng.gen()], rng.gen_range(-1.0..1.0));
    }
    sys
}

fn bitwise_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rcb_balances_and_contains(
        pts in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..800),
        ranks in 1usize..12,
        stretch in prop::array::uniform3(0.01f64..10.0),
    ) {
        prop_assume!(pts.len() >= ranks);
        let scaled: Vec<[f64; 3]> = pts.iter().map(|p| std::array::from_fn(|d| p[d] * stretch[d])).collect();
        let sys = ParticleSystem::from_points(&scaled, &vec![1.0; scaled.len()]);
        let part = rcb_partition(&sys, ranks).unwrap();
        let counts = part.counts();
        prop_assert_eq!(counts.iter().sum::<usize>(), scaled.len());
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        for (i, &r) in part.rank_of.iter().enumerate() {
            prop_assert!(part.regions[r].contains(scaled[i]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn let_is_exact_and_minimal(seed in any::<u64>(), n in 200usize..2500, ranks in 2usize..7) {
        let sys = generate_particles(n, seed);
        let config = small_config();
        let plan = plan_distributed(&sys, ranks, &config).unwrap();
        prop_assert_eq!(plan.audit().violations(), 0);
        let via_let = run_distributed_with(&sys, ranks, &config, RemoteAccess::Let).unwrap();
        let via_windows = run_distributed_with(&sys, ranks, &config, RemoteAccess::Windows).unwrap();
        prop_assert!(bitwise_equal(&via_let.potentials, &via_windows.potentials));
        prop_assert_eq!(via_let.counts, via_windows.counts);
    }
}

#[test]
fn reads_before_the_barrier_fail() {
    let board = WindowBoard::new(3);
    assert!(matches!(board.get_tree_array(1), Err(BltcError::WindowNotReady { .. })));
    assert!(matches!(board.seal(), Err(BltcError::WindowNotReady { .. })));
    assert!(!board.is_sealed());
}

#[test]
fn single_rank_fetches_nothing() {
    let sys = generate_particles(3000, 2);
    let plan = plan_distributed(&sys, 1, &small_config()).unwrap();
    assert!(plan.fetch_stats().is_empty());
    assert!(plan.lets[0].remote.is_empty());
}

#[test]
fn separated_blobs_exchange_few_clusters() {
    let config = EvalConfig::default();
    for n in [20_000, 40_000, 80_000] {
        let sys = two_blobs(n, 10.0, 3);
        let plan = plan_distributed(&sys, 2, &config).unwrap();
        let remote_n = n / 2;
        let bound = (remote_n as f64).log2().ceil() as usize;
        for f in plan.fetch_stats() {
            assert!(f.clusters_fetched >= 1 && f.clusters_fetched <= bound, "{f:?}");
            assert_eq!(f.particles_fetched, 0);
        }
        assert_eq!(plan.audit().violations(), 0);
    }
}

#[test]
fn thirty_two_ranks_neighbors_exchange_more() {
    let n = 100_000;
    let sys = generate_particles(n, 42);
    let plan = plan_distributed(&sys, 32, &EvalConfig::default()).unwrap();
    let counts = plan.partition.counts();
    assert!(counts.iter().all(|&c| c == n / 32 || c == n / 32 + 1));
    assert_eq!(plan.audit().violations(), 0);

    let regions = &plan.partition.regions;
    let touching = |a: usize, b: usize| {
        (0..3).all(|d| regions[a].min[d] <= regions[b].max[d] && regions[b].min[d] <= regions[a].max[d])
    };
    let stats = plan.fetch_stats();
    assert_eq!(stats.len(), 32 * 31);
    let (near, far): (Vec<_>, Vec<_>) = stats.iter().partition(|f| touching(f.origin, f.owner));
    assert!(!near.is_empty() && !far.is_empty());
    let mean = |v: &[&bltc::decomp::FetchStats], f: fn(&bltc::decomp::FetchStats) -> usize| {
        v.iter().map(|s| f(s)).sum::<usize>() as f64 / v.len() as f64
    };
    assert!(mean(&near, |s| s.clusters_fetched) > mean(&far, |s| s.clusters_fetched));
    assert!(mean(&near, |s| s.particles_fetched) > mean(&far, |s| s.particles_fetched));
}

#[test]
fn clustered_input_matches_windows_bitwise() {
    let mut sys = two_blobs(6000, 1.5, 9);
    let extra = generate_particles(2000, 10);
    sys.extend_from_slice(extra.view());
    let config = small_config();
    for ranks in [3, 8] {
        let via_let = run_distributed(&sys, ranks, &config).unwrap();
        let via_windows = run_distributed_with(&sys, ranks, &config, RemoteAccess::Windows).unwrap();
        assert!(bitwise_equal(&via_let.potentials, &via_windows.potentials));
        assert_eq!(via_let.audit.violations(), 0);
    }
}
