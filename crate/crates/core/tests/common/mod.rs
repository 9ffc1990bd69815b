#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write;

use rand::Rng;

use peorl::action_language::parse_action_description;
use peorl::envs::{Dir, TaxiMap, TaxiState};
use peorl::grounding::{ground, ActionId, GroundAtom, GroundDomain, SymbolicState};
use peorl::planner::{QualityBound, RhoFacts};

/// A random single-agent domain: a location fluent over `n` nodes, a flag,
/// and `m` actions each moving between a few random node pairs, plus a
/// flag-setting action at one node.
pub struct Toy {
    pub g: GroundDomain,
    pub init: SymbolicState,
    pub goal: Vec<GroundAtom>,
}

pub fn random_toy<R: Rng>(rng: &mut R) -> Toy {
    let n = rng.gen_range(8..=14);
    let m = rng.gen_range(4..=6);
    let mut src = String::new();
    let nodes: Vec<String> = (1..=n).map(|i| format!("n{}", i)).collect();
    let _ = writeln!(src, "sort node = {{{}}}.", nodes.join(", "));
    let _ = writeln!(src, "fluent at : node.\nfluent flag.");
    for k in 1..=m {
        let _ = writeln!(src, "action a{}.", k);
    }
    src.push_str("action mark.\n");
    for k in 1..=m {
        // one target per source node keeps every action deterministic
        for from in 1..=n {
            if rng.gen_bool(0.7) {
                let to = rng.gen_range(1..=n);
                if to != from {
                    let _ = writeln!(src, "a{} causes at = n{} if at = n{}.", k, to, from);
                }
            }
        }
        if rng.gen_bool(0.3) {
            let _ = writeln!(src, "nonexecutable a{} if flag.", k);
        }
    }
    let _ = writeln!(src, "mark causes flag if at = n{}, ~flag.", rng.gen_range(1..=n));
    src.push_str("inertial at.\ninertial flag.\n");
    let g = ground(&parse_action_description(&src).expect("toy parses")).expect("toy grounds");
    let init = g.parse_state("at = n1, ~flag").unwrap();
    let mut goal_text = format!("at = n{}", rng.gen_range(2..=n));
    if rng.gen_bool(0.3) {
        goal_text.push_str(", flag");
    }
    let goal = g.parse_ground_atoms(&goal_text).unwrap();
    Toy { g, init, goal }
}

/// Integer-valued facts on a random subset of pairs so that sums are exact;
/// the rest read as `inf`.
pub fn random_facts<R: Rng>(g: &GroundDomain, init: &SymbolicState, inf: f64, rng: &mut R) -> RhoFacts {
    let mut facts = RhoFacts::new(inf);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([init.clone()]);
    seen.insert(init.clone());
    while let Some(s) = queue.pop_front() {
        for (a, t) in g.successors(&s).unwrap() {
            if rng.gen_bool(0.7) {
                facts.set(s.clone(), a, rng.gen_range(-9..=9) as f64);
            }
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    facts
}

/// Every loop-free path from `init` of at most `h` steps ending in its
/// first goal state, as `(actions, quality)`. `None` once more than `cap`
/// paths are found.
pub fn enumerate_plans(
    g: &GroundDomain,
    init: &SymbolicState,
    goal: &[GroundAtom],
    facts: &RhoFacts,
    h: usize,
    cap: usize,
) -> Option<Vec<(Vec<ActionId>, f64)>> {
    fn walk(
        g: &GroundDomain,
        s: &SymbolicState,
        goal: &[GroundAtom],
        facts: &RhoFacts,
        h: usize,
        cap: usize,
        on_path: &mut Vec<SymbolicState>,
        acts: &mut Vec<ActionId>,
        q: f64,
        out: &mut Vec<(Vec<ActionId>, f64)>,
    ) -> bool {
        if s.satisfies(goal) {
            out.push((acts.clone(), q));
            return out.len() <= cap;
        }
        if acts.len() == h {
            return true;
        }
        for (a, t) in g.successors(s).unwrap() {
            if on_path.contains(&t) {
                continue;
            }
            on_path.push(t.clone());
            acts.push(a);
            let ok = walk(g, &t, goal, facts, h, cap, on_path, acts, q + facts.lookup(s, a), out);
            acts.pop();
            on_path.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    let ok = walk(g, init, goal, facts, h, cap, &mut vec![init.clone()], &mut Vec::new(), 0.0, &mut out);
    ok.then_some(out)
}

/// Best plan by quality, then length, then action order.
pub fn best_overall<'a>(plans: &'a [(Vec<ActionId>, f64)], bound: QualityBound) -> Option<&'a (Vec<ActionId>, f64)> {
    plans
        .iter()
        .filter(|(_, q)| bound.admits(*q))
        .min_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap()
                .then(x.0.len().cmp(&y.0.len()))
                .then(x.0.cmp(&y.0))
        })
}

/// Among the shortest admissible plans, the best by quality then action
/// order.
pub fn best_shortest<'a>(plans: &'a [(Vec<ActionId>, f64)], bound: QualityBound) -> Option<&'a (Vec<ActionId>, f64)> {
    plans
        .iter()
        .filter(|(_, q)| bound.admits(*q))
        .min_by(|x, y| {
            x.0.len()
                .cmp(&y.0.len())
                .then(y.1.partial_cmp(&x.1).unwrap())
                .then(x.0.cmp(&y.0))
        })
}

fn cell_distance(map: &TaxiMap, from: (u8, u8), to: (u8, u8)) -> usize {
    let mut dist = HashMap::from([(from, 0usize)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            return dist[&c];
        }
        for d in [Dir::N, Dir::S, Dir::E, Dir::W] {
            if let Some(n) = map.step(c, d) {
                if !dist.contains_key(&n) {
                    dist.insert(n, dist[&c] + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    panic!("{:?} unreachable from {:?}", to, from)
}

/// Fewest primitive actions that deliver the passenger: breadth-first
/// distances over the map's cells plus one pickup and one dropoff.
pub fn taxi_shortest(map: &TaxiMap, start: &TaxiState) -> usize {
    let pickup = map.depots[start.passenger as usize].0;
    let dest = map.depots[start.dest as usize].0;
    cell_distance(map, (start.row, start.col), pickup) + 1 + cell_distance(map, pickup, dest) + 1
}
