mod common;

use std::collections::{HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use peorl::action_language::parse_action_description;
use peorl::envs::Environment;
use peorl::grounding::{enumerate_reachable, ground, GroundDomain, SymbolicState};
use peorl::harness::{ground_domain, taxi_setup, DomainKind};
use peorl::planner::{plan, GoalSpec, PlannerConfig, QualityBound, RhoFacts, SearchMode};

use common::{best_overall, enumerate_plans, random_facts, random_toy};

const OPEN_GRID: &str = "
sort row = 1..4.
sort col = 1..4.
sort cell = row * col.
sort dir = {e, s, w, n}.
fluent pos : cell.
action move(dir).
move(e) causes pos(X,Y+1) if pos(X,Y).
move(w) causes pos(X,Y-1) if pos(X,Y).
move(s) causes pos(X+1,Y) if pos(X,Y).
move(n) causes pos(X-1,Y) if pos(X,Y).
nonexecutable move(e) if pos(X,4).
nonexecutable move(w) if pos(X,1).
nonexecutable move(s) if pos(4,Y).
nonexecutable move(n) if pos(1,Y).
inertial pos.
";

fn all_pairs(g: &GroundDomain, init: &SymbolicState, value: f64) -> RhoFacts {
    let mut facts = RhoFacts::new(1e6);
    for s in &enumerate_reachable(g, init, 10_000).unwrap().states {
        for (a, _) in g.successors(s).unwrap() {
            facts.set(s.clone(), a, value);
        }
    }
    facts
}

#[test]
fn unit_costs_give_manhattan_plans() {
    let g = ground(&parse_action_description(OPEN_GRID).unwrap()).unwrap();
    for (r0, c0, r1, c1) in [(1, 1, 4, 4), (2, 3, 2, 1), (4, 1, 1, 2), (3, 3, 3, 3)] {
        let init = g.parse_state(&format!("pos({},{})", r0, c0)).unwrap();
        let goal = GoalSpec::new(g.parse_ground_atoms(&format!("pos({},{})", r1, c1)).unwrap());
        let facts = all_pairs(&g, &init, -1.0);
        let cfg = PlannerConfig {
            max_horizon: 16,
            mode: SearchMode::Exhaustive,
            ..PlannerConfig::default()
        };
        let p = plan(&g, &init, &goal, &facts, &cfg).unwrap().plan.unwrap();
        let distance = (r0 as i32 - r1 as i32).abs() + (c0 as i32 - c1 as i32).abs();
        assert_eq!(p.len() as i32, distance);
        assert_eq!(p.estimated_quality, -distance as f64);
        // the enumeration agrees on the optimum
        let plans = enumerate_plans(&g, &init, &goal.atoms, &facts, 16, 1_000_000).unwrap();
        assert_eq!(best_overall(&plans, QualityBound::Unbounded).unwrap().1, -distance as f64);
    }
}

#[test]
fn nothing_beats_the_best_known_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tried = 0;
    while tried < 15 {
        let toy = random_toy(&mut rng);
        // unknown pairs read as 0 rather than an optimistic default
        let facts_all = random_facts(&toy.g, &toy.init, 0.0, &mut rng);
        let Some(plans) = enumerate_plans(&toy.g, &toy.init, &toy.goal, &facts_all, 10, 10_000) else {
            continue;
        };
        let Some(best) = best_overall(&plans, QualityBound::Unbounded) else {
            continue;
        };
        let cfg = PlannerConfig {
            max_horizon: 10,
            mode: SearchMode::Exhaustive,
            ..PlannerConfig::default()
        };
        let goal = GoalSpec::new(toy.goal.clone()).with_bound(QualityBound::GreaterThan(best.1));
        let out = plan(&toy.g, &toy.init, &goal, &facts_all, &cfg).unwrap();
        assert!(out.plan.is_none() && !out.truncated);
        let goal = GoalSpec::new(toy.goal.clone()).with_bound(QualityBound::AtLeast(best.1));
        assert_eq!(plan(&toy.g, &toy.init, &goal, &facts_all, &cfg).unwrap().plan.unwrap().estimated_quality, best.1);
        tried += 1;
    }
}

/// Breadth-first search over `successors`, written independently of the
/// grounding module's own enumeration.
fn reachable_by_hand(g: &GroundDomain, init: &SymbolicState) -> HashSet<SymbolicState> {
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(s) = queue.pop_front() {
        for (_, t) in g.successors(&s).unwrap() {
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    seen
}

#[test]
fn taxi_reachable_states_match_hand_bfs() {
    for kind in [DomainKind::Taxi1, DomainKind::Taxi2] {
        let g = ground_domain(kind).unwrap();
        let mut setup = taxi_setup(kind, &g, 4).unwrap();
        let s0 = setup.env.reset();
        let init = setup.env.abstract_state(&s0);
        let r = enumerate_reachable(&g, &init, 100_000).unwrap();
        let by_hand = reachable_by_hand(&g, &init);
        assert_eq!(r.len(), by_hand.len());
        assert!(r.states.iter().all(|s| by_hand.contains(s)));
    }
}

#[test]
fn gridworld_states_have_one_position() {
    let g = ground_domain(DomainKind::GridWorld).unwrap();
    let init = g.parse_state("pos(3,1), ~dooractive, ~dooropen").unwrap();
    let pos: Vec<_> = (0..g.ground_fluents().len())
        .filter(|&i| g.ground_fluents()[i].name == "pos")
        .collect();
    assert_eq!(pos.len(), 1, "pos is one multi-valued fluent");
    for s in &enumerate_reachable(&g, &init, 100_000).unwrap().states {
        let atoms = g.state_atoms(s);
        let positions = atoms.iter().filter(|a| g.atom_to_string(**a).starts_with("pos(")).count();
        assert_eq!(positions, 1);
    }
}
