//! Greedy allocation against the exhaustive optimum on small instances drawn
//! from the system model (deployment, shadowing, connectivity per grade).

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_core::alloc::{
    allocate_bruteforce, allocate_greedy, allocate_greedy_with, configure_connectivity, AllocationProblem, Leg, Pool,
    RbPooling, UserLeg,
};
use tactile_core::grades::Grade;
use tactile_core::radio::{db_to_linear, draw_link_states, generate_deployment, CellId, DeploymentConfig};
use tactile_core::sim::SimConfig;

const INSTANCES: u64 = 100;

/// 1 to 3 users, one small cell, up to 6 RBs split between the macro and the
/// small-cell pool (or one shared pool).
fn instance(seed: u64, pooling: RbPooling) -> AllocationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SimConfig {
        deployment: DeploymentConfig { n_users: rng.random_range(1..=3), n_small_cells: 1, ..Default::default() },
        ..Default::default()
    };
    let d = generate_deployment(&mut rng, &cfg.deployment);
    let links = draw_link_states(&mut rng, &d, &cfg.channel).unwrap();
    let grade = if rng.random_bool(0.5) { Grade::Ultra } else { Grade::Normal };
    let modes = configure_connectivity(&d, grade);
    let mut p = AllocationProblem::from_links(&links, &modes, 1, pooling, &cfg.channel, cfg.link_budget(), cfg.utility)
        .unwrap();
    let total = rng.random_range(0..=6);
    let macro_rbs = rng.random_range(0..=total);
    p.pools[0].size = macro_rbs;
    if let Some(small) = p.pools.get_mut(1) {
        small.size = total - macro_rbs;
    } else {
        p.pools[0].size = total;
    }
    p
}

fn sum_utility(p: &AllocationProblem, a: &tactile_core::alloc::Allocation) -> f64 {
    p.objective(&a.counts(p.users.len())).primary
}

#[test]
fn greedy_reaches_ninety_percent_of_optimum() {
    let mut worst = f64::INFINITY;
    for pooling in [RbPooling::PerCell, RbPooling::Shared] {
        for seed in 0..INSTANCES {
            let p = instance(seed, pooling);
            let greedy = allocate_greedy(&p);
            let best = allocate_bruteforce(&p).unwrap();
            greedy.check(&p).unwrap();
            best.check(&p).unwrap();
            let (g, b) = (sum_utility(&p, &greedy), sum_utility(&p, &best));
            assert!(g <= b + 1e-12, "seed {seed}: greedy {g} above optimum {b}");
            let ratio = if b > 0.0 { g / b } else { 1.0 };
            worst = worst.min(ratio);
            assert!(ratio >= 0.9, "{pooling:?} seed {seed}: greedy {g} vs optimum {b}");
        }
    }
    println!("worst greedy/optimum ratio {worst:.4}");
}

#[test]
fn no_resource_block_is_assigned_twice() {
    for seed in 0..INSTANCES {
        let mut p = instance(seed, RbPooling::PerCell);
        for pool in &mut p.pools {
            pool.size += 20;
        }
        for a in [allocate_greedy(&p), allocate_bruteforce(&p).unwrap_or_else(|_| allocate_greedy(&p))] {
            a.check(&p).unwrap();
            let mut seen = std::collections::HashSet::new();
            for (pool, rb, _) in a.grants() {
                assert!(seen.insert((pool, rb)), "seed {seed}: RB {rb} of pool {pool} granted twice");
            }
            assert!(a.assigned() <= p.total_rbs());
        }
    }
}

#[test]
fn sum_utility_is_monotone_in_budget() {
    for seed in 0..INSTANCES {
        let base = instance(seed, RbPooling::Shared);
        let (mut last_greedy, mut last_best) = (0.0, 0.0);
        for budget in 0..=6 {
            let mut p = base.clone();
            p.pools[0].size = budget;
            let g = sum_utility(&p, &allocate_greedy(&p));
            let b = sum_utility(&p, &allocate_bruteforce(&p).unwrap());
            assert!(g >= last_greedy, "seed {seed}: greedy drops from {last_greedy} to {g} at budget {budget}");
            assert!(b >= last_best, "seed {seed}: optimum drops from {last_best} to {b} at budget {budget}");
            (last_greedy, last_best) = (g, b);
        }
    }
}

fn leg_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, bool)> {
    (-5.0..50.0f64, -5.0..50.0f64, -5.0..50.0f64, -5.0..50.0f64, any::<bool>())
}

fn synthetic(users: Vec<(f64, f64, f64, f64, bool)>, macro_rbs: usize, small_rbs: usize) -> AllocationProblem {
    let cfg = SimConfig::default();
    let users = users
        .into_iter()
        .map(|(md, mu, sd, su, dual)| {
            let mut legs = vec![UserLeg {
                leg: Leg::Macro,
                cell: CellId::Macro,
                pool: 0,
                mean_snr: [db_to_linear(md), db_to_linear(mu)],
            }];
            if dual {
                legs.push(UserLeg {
                    leg: Leg::Small,
                    cell: CellId::Small(0),
                    pool: 1,
                    mean_snr: [db_to_linear(sd), db_to_linear(su)],
                });
            }
            legs
        })
        .collect();
    let pools =
        vec![Pool { label: "macro".into(), size: macro_rbs }, Pool { label: "small-0".into(), size: small_rbs }];
    AllocationProblem::new(users, pools, cfg.channel.clone(), cfg.link_budget(), cfg.utility).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With a single single-connected user the greedy is optimal.
    #[test]
    fn single_user_greedy_is_optimal(snr in -5.0..60.0f64, ul in -5.0..60.0f64, rbs in 0usize..=6) {
        let p = synthetic(vec![(snr, ul, 0.0, 0.0, false)], rbs, 0);
        let g = sum_utility(&p, &allocate_greedy(&p));
        let b = sum_utility(&p, &allocate_bruteforce(&p).unwrap());
        prop_assert!((g - b).abs() <= 1e-12, "greedy {} optimum {}", g, b);
    }

    /// A strictly increasing transform of the gains with f(0) = 0 leaves the
    /// allocation unchanged, and every allocation respects the pools.
    #[test]
    fn greedy_is_invariant_under_monotone_transform(
        users in prop::collection::vec(leg_strategy(), 1..=3),
        macro_rbs in 0usize..=4,
        small_rbs in 0usize..=4,
    ) {
        let p = synthetic(users, macro_rbs, small_rbs);
        let a = allocate_greedy(&p);
        a.check(&p).unwrap();
        prop_assert_eq!(&a, &allocate_greedy_with(&p, |g| g * g));
        prop_assert_eq!(&a, &allocate_greedy_with(&p, |g| 3.0 * g));
    }
}
