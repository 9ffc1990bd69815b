//! Quality-aware symbolic planning over a grounded transition system.
//!
//! Plans are loop-free transition paths from an initial state to a goal
//! state; goal states are terminal, so only the last state satisfies the
//! goal. A plan's estimated quality is the sum of gain-reward facts along
//! its transitions; unknown pairs read as an optimistic `inf_value`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;
use std::sync::Arc;

use crate::grounding::{
    enumerate_reachable, ActionId, GroundAtom, GroundDomain, GroundingError, Reachable,
    SymbolicState,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RhoFacts {
    table: HashMap<(SymbolicState, ActionId), f64>,
    pub inf_value: f64,
}

impl Default for RhoFacts {
    fn default() -> Self {
        RhoFacts::new(1e6)
    }
}

impl RhoFacts {
    pub fn new(inf_value: f64) -> Self {
        RhoFacts {
            table: HashMap::new(),
            inf_value,
        }
    }

    /// `(1 + max_horizon) * r_max`: large enough that one unexplored
    /// transition outweighs any sequence of known per-step gain rewards.
    pub fn inf_for(max_horizon: usize, r_max: f64) -> f64 {
        (1 + max_horizon) as f64 * r_max.abs().max(1.0)
    }

    pub fn set(&mut self, s: SymbolicState, a: ActionId, value: f64) {
        self.table.insert((s, a), value);
    }

    pub fn get(&self, s: &SymbolicState, a: ActionId) -> Option<f64> {
        self.table.get(&(s.clone(), a)).copied()
    }

    pub fn lookup(&self, s: &SymbolicState, a: ActionId) -> f64 {
        self.get(s, a).unwrap_or(self.inf_value)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(SymbolicState, ActionId), &f64)> {
        self.table.iter()
    }
}

pub fn rho_lookup(facts: &RhoFacts, s: &SymbolicState, a: ActionId) -> f64 {
    facts.lookup(s, a)
}

/// Linear constraint on plan quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityBound {
    Unbounded,
    AtLeast(f64),
    GreaterThan(f64),
}

fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

impl QualityBound {
    /// Comparisons allow a relative slack of 1e-9 so that the same sum
    /// accumulated in a different order compares as equal.
    pub fn admits(self, q: f64) -> bool {
        match self {
            QualityBound::Unbounded => q > f64::NEG_INFINITY,
            QualityBound::AtLeast(n) => q >= n - tol(n),
            QualityBound::GreaterThan(n) => q > n + tol(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub atoms: Vec<GroundAtom>,
    pub bound: QualityBound,
}

impl GoalSpec {
    pub fn new(atoms: Vec<GroundAtom>) -> Self {
        GoalSpec {
            atoms,
            bound: QualityBound::Unbounded,
        }
    }

    pub fn with_bound(mut self, bound: QualityBound) -> Self {
        self.bound = bound;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Shortest horizon with a feasible plan; best quality at that horizon.
    Deepening,
    /// Best quality over all horizons; ties go to the shorter plan.
    Exhaustive,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerConfig {
    pub max_horizon: usize,
    pub state_cap: usize,
    /// Search nodes expanded per call before giving up.
    pub node_cap: usize,
    pub mode: SearchMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_horizon: 60,
            state_cap: 200_000,
            node_cap: 50_000_000,
            mode: SearchMode::Deepening,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// `states.len() == actions.len() + 1`
    pub states: Vec<SymbolicState>,
    pub actions: Vec<ActionId>,
    pub estimated_quality: f64,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&SymbolicState, ActionId, &SymbolicState)> {
        self.actions
            .iter()
            .enumerate()
            .map(move |(i, &a)| (&self.states[i], a, &self.states[i + 1]))
    }

    /// Checks every step against the domain, loop-freeness, and that only the
    /// last state satisfies the goal.
    pub fn validate(&self, g: &GroundDomain, goal: &[GroundAtom]) -> bool {
        if self.states.len() != self.actions.len() + 1 {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        if !self.states.iter().all(|s| seen.insert(s)) {
            return false;
        }
        let steps_ok = self.transitions().all(|(s, a, t)| {
            matches!(g.successor(s, a), Ok(crate::grounding::Successor::Next(ref n)) if n == t)
        });
        let (last, earlier) = self.states.split_last().expect("non-empty");
        steps_ok && last.satisfies(goal) && !earlier.iter().any(|s| s.satisfies(goal))
    }
}

pub fn plan_quality_estimate(p: &Plan, facts: &RhoFacts) -> f64 {
    p.transitions().fold(0.0, |q, (s, a, _)| q + facts.lookup(s, a))
}

/// Numbered `⟨state-diff, action⟩` lines followed by the quality.
pub fn format_plan(g: &GroundDomain, p: &Plan) -> String {
    let mut out = String::new();
    for (i, (s, a, t)) in p.transitions().enumerate() {
        let _ = writeln!(
            out,
            "{}. ⟨{{{}}}, {}⟩",
            i + 1,
            g.state_diff(s, t).join(","),
            g.action_name(a)
        );
    }
    let _ = writeln!(out, "quality {}", p.estimated_quality);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Option<Plan>,
    /// A cap was hit; `plan` is then the best found so far, not a proof of
    /// optimality, and `None` does not mean unsatisfiable.
    pub truncated: bool,
    /// Search nodes expanded.
    pub nodes: usize,
}

/// Planner holding reachable graphs per initial state across calls.
#[derive(Debug, Clone, Default)]
pub struct Planner {
    pub cfg: PlannerConfig,
    graphs: HashMap<SymbolicState, Option<Arc<Reachable>>>,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Planner {
            cfg,
            graphs: HashMap::new(),
        }
    }

    pub fn plan(
        &mut self,
        g: &GroundDomain,
        init: &SymbolicState,
        goal: &GoalSpec,
        facts: &RhoFacts,
    ) -> Result<PlanOutcome, GroundingError> {
        let graph = match self.graphs.get(init) {
            Some(r) => r.clone(),
            None => {
                let r = match enumerate_reachable(g, init, self.cfg.state_cap) {
                    Ok(r) => Some(Arc::new(r)),
                    Err(GroundingError::StateCap { .. }) => None,
                    Err(e) => return Err(e),
                };
                self.graphs.insert(init.clone(), r.clone());
                r
            }
        };
        Ok(match graph {
            Some(r) => search(&r, goal, facts, &self.cfg),
            None => PlanOutcome {
                plan: None,
                truncated: true,
                nodes: 0,
            },
        })
    }
}

pub fn plan(
    g: &GroundDomain,
    init: &SymbolicState,
    goal: &GoalSpec,
    facts: &RhoFacts,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, GroundingError> {
    Planner::new(*cfg).plan(g, init, goal, facts)
}

/// Removes edges that no loop-free plan within `h` steps can use.
///
/// Unexplored edges carry the huge default gain reward, so one that no plan
/// can use (say, leading into a pocket whose only exit was already passed)
/// would keep the search bound high everywhere near it. Every edge `u -> v`
/// must lie on some walk of at most `h` steps from the initial state to a
/// goal. Unexplored edges, when there are few enough to afford it, must
/// additionally reach a goal from `v` without `u` or the initial state, and
/// reach `u` from the initial state without `v`. All conditions are
/// necessary, so no plan is lost.
fn drop_unusable(r: &Reachable, facts: &RhoFacts, is_goal: &[bool], h: usize, edges: &mut Vec<Edge>) {
    let n = r.len();
    let mut fwd: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut back: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges.iter() {
        fwd[e.from].push(e.to);
        back[e.to].push(e.from);
    }
    let mut blocked = vec![false; n];
    let mut bfs = Bfs {
        is_goal,
        dist: vec![usize::MAX; n],
        queue: VecDeque::new(),
    };
    bfs.run(&fwd, &[0], |_| false, &blocked);
    let from_init = bfs.dist.clone();
    let goals: Vec<usize> = (0..n).filter(|&x| is_goal[x]).collect();
    bfs.run(&back, &goals, |_| false, &blocked);
    let to_goal = bfs.dist.clone();
    edges.retain(|e| {
        from_init[e.from] != usize::MAX && to_goal[e.to] != usize::MAX && from_init[e.from] + 1 + to_goal[e.to] <= h
    });

    let unexplored: Vec<usize> = (0..edges.len())
        .filter(|&i| facts.get(&r.states[edges[i].from], edges[i].action).is_none())
        .collect();
    // each check is two searches over the whole graph
    if unexplored.is_empty() || unexplored.len().saturating_mul(edges.len()) > 5_000_000 {
        return;
    }
    let mut keep = vec![true; edges.len()];
    for i in unexplored {
        let Edge { from: u, to: v, .. } = edges[i];
        blocked[u] = true;
        blocked[0] = true;
        let tail = bfs.run(&fwd, &[v], |x| is_goal[x], &blocked);
        blocked[u] = false;
        blocked[0] = false;
        let head = tail.and_then(|_| {
            blocked[v] = true;
            let d = bfs.run(&back, &[u], |x| x == 0, &blocked);
            blocked[v] = false;
            d
        });
        keep[i] = matches!((head, tail), (Some(a), Some(b)) if a + 1 + b <= h);
    }
    let mut k = keep.into_iter();
    edges.retain(|_| k.next().unwrap_or(true));
}

struct Bfs<'a> {
    is_goal: &'a [bool],
    dist: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Bfs<'_> {
    /// Breadth-first from `src` over `links`, never continuing through a
    /// goal state; distance to the first node satisfying `stop`.
    fn run(&mut self, links: &[Vec<usize>], src: &[usize], stop: impl Fn(usize) -> bool, blocked: &[bool]) -> Option<usize> {
        self.dist.iter_mut().for_each(|d| *d = usize::MAX);
        self.queue.clear();
        for &x in src {
            self.dist[x] = 0;
            self.queue.push_back(x);
        }
        while let Some(x) = self.queue.pop_front() {
            if stop(x) {
                return Some(self.dist[x]);
            }
            if self.dist[x] > 0 && self.is_goal[x] {
                continue;
            }
            for &y in &links[x] {
                if !blocked[y] && self.dist[y] == usize::MAX {
                    self.dist[y] = self.dist[x] + 1;
                    self.queue.push_back(y);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    action: ActionId,
    to: usize,
    w: f64,
}

struct Search {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    /// `best[r][e]`: best quality of an `r`-step non-backtracking walk to a
    /// goal that starts with edge `e`; an upper bound for loop-free paths.
    best: Vec<Vec<f64>>,
    is_goal: Vec<bool>,
    bound: QualityBound,
    visited: Vec<bool>,
    path: Vec<(ActionId, usize)>,
    incumbent: Option<(f64, Vec<(ActionId, usize)>)>,
    nodes: usize,
    node_cap: usize,
    truncated: bool,
}

fn search(r: &Reachable, goal: &GoalSpec, facts: &RhoFacts, cfg: &PlannerConfig) -> PlanOutcome {
    let n = r.len();
    let is_goal: Vec<bool> = r.states.iter().map(|s| s.satisfies(&goal.atoms)).collect();
    // a loop-free plan never re-enters the initial state or stays put, and
    // goal states end it
    let mut edges: Vec<Edge> = r
        .transitions
        .iter()
        .filter(|t| t.to != 0 && t.to != t.from && !is_goal[t.from])
        .map(|t| Edge {
            from: t.from,
            action: t.action,
            to: t.to,
            w: facts.lookup(&r.states[t.from], t.action),
        })
        .collect();
    edges.sort_by_key(|e| (e.from, e.action));
    let h = cfg.max_horizon;
    drop_unusable(r, facts, &is_goal, h, &mut edges);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        adj[e.from].push(i);
    }
    // Loop-free paths never step straight back, so bounding them by
    // non-backtracking walks keeps dead ends from inflating the bound.
    // Goal states end the episode, so walks never continue through them.
    let m = edges.len();
    let mut best = vec![vec![f64::NEG_INFINITY; m]; h + 1];
    if h >= 1 {
        for (i, e) in edges.iter().enumerate() {
            if is_goal[e.to] {
                best[1][i] = e.w;
            }
        }
    }
    for k in 2..=h {
        for (i, e) in edges.iter().enumerate() {
            if is_goal[e.to] {
                continue;
            }
            let mut b = f64::NEG_INFINITY;
            for &j in &adj[e.to] {
                if edges[j].to != e.from && best[k - 1][j] > b {
                    b = best[k - 1][j];
                }
            }
            best[k][i] = e.w + b;
        }
    }
    if cfg.mode == SearchMode::Exhaustive {
        // prefix maxima: best walk of at most k steps
        for k in 2..=h {
            for i in 0..m {
                if best[k - 1][i] > best[k][i] {
                    best[k][i] = best[k - 1][i];
                }
            }
        }
    }
    let mut st = Search {
        edges,
        adj,
        best,
        is_goal,
        bound: goal.bound,
        visited: vec![false; n],
        path: Vec::new(),
        incumbent: None,
        nodes: 0,
        node_cap: cfg.node_cap,
        truncated: false,
    };
    st.visited[0] = true;
    match cfg.mode {
        SearchMode::Deepening => {
            for depth in 0..=h {
                st.exact(0, depth, 0.0);
                if st.incumbent.is_some() || st.truncated {
                    break;
                }
            }
        }
        SearchMode::Exhaustive => st.any(0, h, 0.0),
    }
    let plan = st.incumbent.take().map(|(q, steps)| {
        let mut states = vec![r.states[0].clone()];
        let mut actions = Vec::new();
        for (a, t) in steps {
            actions.push(a);
            states.push(r.states[t].clone());
        }
        Plan {
            states,
            actions,
            estimated_quality: q,
        }
    });
    PlanOutcome {
        plan,
        truncated: st.truncated,
        nodes: st.nodes,
    }
}

impl Search {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            self.truncated = true;
        }
        !self.truncated
    }

    fn beats_incumbent(&self, ub: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((inc, _)) => ub > inc + tol(*inc),
        }
    }

    /// Paths of exactly `remaining` more steps; DFS order is action order,
    /// so keeping only strict improvements yields the lexicographic tie-break.
    fn exact(&mut self, s: usize, remaining: usize, q: f64) {
        if !self.tick() {
            return;
        }
        if remaining == 0 {
            if self.is_goal[s] && self.bound.admits(q) && self.beats_incumbent(q) {
                self.incumbent = Some((q, self.path.clone()));
            }
            return;
        }
        if self.is_goal[s] {
            return;
        }
        for i in 0..self.adj[s].len() {
            let e = self.adj[s][i];
            let Edge { action: a, to: t, w, .. } = self.edges[e];
            if self.visited[t] {
                continue;
            }
            let ub = q + self.best[remaining][e];
            if ub == f64::NEG_INFINITY || !self.bound.admits(ub) || !self.beats_incumbent(ub) {
                continue;
            }
            self.visited[t] = true;
            self.path.push((a, t));
            self.exact(t, remaining - 1, q + w);
            self.path.pop();
            self.visited[t] = false;
            if self.truncated {
                return;
            }
        }
    }

    fn better(&self, q: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((inc, steps)) => {
                let t = tol(*inc);
                if q > inc + t {
                    return true;
                }
                if q < inc - t {
                    return false;
                }
                let mine: Vec<ActionId> = self.path.iter().map(|p| p.0).collect();
                let theirs: Vec<ActionId> = steps.iter().map(|p| p.0).collect();
                (mine.len(), mine) < (theirs.len(), theirs)
            }
        }
    }

    /// Paths of any length up to `remaining` more steps.
    fn any(&mut self, s: usize, remaining: usize, q: f64) {
        if !self.tick() {
            return;
        }
        if self.is_goal[s] && self.bound.admits(q) && self.better(q) {
            self.incumbent = Some((q, self.path.clone()));
        }
        if remaining == 0 || self.is_goal[s] {
            return;
        }
        for i in 0..self.adj[s].len() {
            let e = self.adj[s][i];
            let Edge { action: a, to: t, w, .. } = self.edges[e];
            if self.visited[t] {
                continue;
            }
            let ub = q + self.best[remaining][e];
            if ub == f64::NEG_INFINITY || !self.bound.admits(ub) {
                continue;
            }
            if let Some((inc, steps)) = &self.incumbent {
                let longer = self.path.len() + 1 > steps.len();
                if ub < inc - tol(*inc) || (ub <= inc + tol(*inc) && longer) {
                    continue;
                }
            }
            self.visited[t] = true;
            self.path.push((a, t));
            self.any(t, remaining - 1, q + w);
            self.path.pop();
            self.visited[t] = false;
            if self.truncated {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_language::parse_action_description;
    use crate::grounding::ground;

    fn grid() -> GroundDomain {
        ground(&parse_action_description(include_str!("../data/gridworld.bc")).unwrap()).unwrap()
    }

    #[test]
    fn lookup_defaults_to_inf() {
        let g = grid();
        let s = g.parse_state("pos(1,1), ~dooractive, ~dooropen").unwrap();
        let mut facts = RhoFacts::new(1e6);
        assert_eq!(rho_lookup(&facts, &s, ActionId(0)), 1e6);
        facts.set(s.clone(), ActionId(0), -1.0);
        assert_eq!(rho_lookup(&facts, &s, ActionId(0)), -1.0);
    }

    #[test]
    fn door_plan_through_activate_and_push() {
        let g = grid();
        let init = g.parse_state("pos(9,8), ~dooractive, ~dooropen").unwrap();
        let goal = GoalSpec::new(g.parse_ground_atoms("pos(9,10)").unwrap());
        let out = plan(&g, &init, &goal, &RhoFacts::default(), &PlannerConfig::default()).unwrap();
        let p = out.plan.unwrap();
        let names: Vec<String> = p.actions.iter().map(|&a| g.action_name(a)).collect();
        assert_eq!(names, ["move(e)", "activate", "push", "move(e)"]);
        assert!(p.validate(&g, &goal.atoms));
        assert_eq!(p.estimated_quality, 4e6);
        assert_eq!(plan_quality_estimate(&p, &RhoFacts::default()), 4e6);
    }

    #[test]
    fn satisfied_initial_state_gives_empty_plan() {
        let g = grid();
        let init = g.parse_state("pos(2,2), ~dooractive, ~dooropen").unwrap();
        let goal = GoalSpec::new(g.parse_ground_atoms("pos(2,2)").unwrap())
            .with_bound(QualityBound::AtLeast(0.0));
        let p = plan(&g, &init, &goal, &RhoFacts::default(), &PlannerConfig::default())
            .unwrap()
            .plan
            .unwrap();
        assert!(p.is_empty());
        assert_eq!(p.estimated_quality, 0.0);
    }

    #[test]
    fn mixed_known_and_unknown_quality() {
        let g = grid();
        let init = g.parse_state("pos(2,2), ~dooractive, ~dooropen").unwrap();
        let e = g.action_by_name("move(e)").unwrap();
        let mut facts = RhoFacts::new(1e6);
        facts.set(init.clone(), e, -1.0);
        let goal = GoalSpec::new(g.parse_ground_atoms("pos(2,4)").unwrap());
        let p = plan(&g, &init, &goal, &facts, &PlannerConfig::default())
            .unwrap()
            .plan
            .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(plan_quality_estimate(&p, &facts), -1.0 + 1e6);
    }

    #[test]
    fn strict_bound_excludes_equal_quality() {
        let g = grid();
        let init = g.parse_state("pos(2,2), ~dooractive, ~dooropen").unwrap();
        let goal = GoalSpec::new(g.parse_ground_atoms("pos(2,3)").unwrap());
        let facts = RhoFacts::new(5.0);
        let cfg = PlannerConfig {
            max_horizon: 3,
            ..PlannerConfig::default()
        };
        let at_least = goal.clone().with_bound(QualityBound::AtLeast(5.0));
        assert!(plan(&g, &init, &at_least, &facts, &cfg).unwrap().plan.is_some());
        // one step gives 5; 3-step detours give 15
        let gt = goal.with_bound(QualityBound::GreaterThan(5.0));
        let p = plan(&g, &init, &gt, &facts, &cfg).unwrap().plan.unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.estimated_quality, 15.0);
    }

    #[test]
    fn node_cap_flags_truncation() {
        let g = grid();
        let init = g.parse_state("pos(1,1), ~dooractive, ~dooropen").unwrap();
        let goal = GoalSpec::new(g.parse_ground_atoms("pos(20,20)").unwrap());
        let cfg = PlannerConfig {
            node_cap: 10,
            ..PlannerConfig::default()
        };
        let out = plan(&g, &init, &goal, &RhoFacts::default(), &cfg).unwrap();
        assert!(out.truncated);
        assert!(out.plan.is_none());
    }
}
