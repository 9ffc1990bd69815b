use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use peorl::envs::{Environment, GridState, GridWorld, Taxi, TaxiMap};
use peorl::grounding::enumerate_reachable;
use peorl::harness::{ground_domain, gridworld_setup, taxi_setup, DomainKind};

#[test]
fn taxi_initial_draws_are_uniform() {
    let map = TaxiMap::standard();
    let depots = map.depots.len() as u8;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut counts = vec![0usize; map.rows as usize * map.cols as usize];
    let draws = 10_000;
    for _ in 0..draws {
        let s = Taxi::random_initial(&map, &mut rng);
        assert!(s.passenger < depots && s.dest < depots && s.passenger != s.dest);
        assert!(!s.visited);
        counts[(s.row as usize - 1) * map.cols as usize + s.col as usize - 1] += 1;
    }
    let expected = draws as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 24 degrees of freedom, 0.1% level
    assert!(chi2 < 51.18, "chi-square {}", chi2);
}

#[test]
fn gridworld_starts_in_the_first_column() {
    let g = ground_domain(DomainKind::GridWorld).unwrap();
    for seed in 0..50 {
        let mut setup = gridworld_setup(&g, seed).unwrap();
        let s = setup.env.reset();
        assert_eq!(s.col, 1, "seed {}", seed);
        assert!(setup.env.map().starts.contains(&(s.row, s.col)));
        assert_eq!(s, GridWorld::fresh(s.row, s.col));
    }
}

#[test]
fn taxi_abstraction_covers_reachable_states() {
    for kind in [DomainKind::Taxi1, DomainKind::Taxi2] {
        let g = ground_domain(kind).unwrap();
        for seed in 0..4 {
            let mut setup = taxi_setup(kind, &g, seed).unwrap();
            let s0 = setup.env.reset();
            let init = setup.env.abstract_state(&s0);
            let images: HashSet<_> = setup.env.all_states().map(|s| setup.env.abstract_state(&s)).collect();
            let reach = enumerate_reachable(&g, &init, 100_000).unwrap();
            assert!(reach.states.iter().all(|s| images.contains(s)), "{:?} seed {}", kind, seed);
        }
    }
}

#[test]
fn gridworld_abstraction_covers_reachable_states() {
    let g = ground_domain(DomainKind::GridWorld).unwrap();
    let mut setup = gridworld_setup(&g, 0).unwrap();
    let (rows, cols) = (setup.env.map().rows, setup.env.map().cols);
    let mut images = HashSet::new();
    for row in 1..=rows {
        for col in 1..=cols {
            for grabbed in [false, true] {
                for active in [false, true] {
                    for open in [false, true] {
                        let s = GridState { row, col, grabbed, active, open };
                        images.insert(setup.env.abstract_state(&s));
                    }
                }
            }
        }
    }
    let s0 = setup.env.reset();
    let init = setup.env.abstract_state(&s0);
    let reach = enumerate_reachable(&g, &init, 100_000).unwrap();
    assert!(reach.states.iter().all(|s| images.contains(s)));
}
