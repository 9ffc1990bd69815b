use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use crate::envs::{EnvAction, EnvError, Environment, Taxi, TaxiState, DROPOFF, PICKUP};
use crate::grounding::{GroundAtom, GroundDomain, SymbolicState};
use crate::hrl::{map_plan_to_options, run_option, ActionCatalog, IntraPolicy, LearningTables, OptionOutcome, Rates, Schedule};
use crate::peorl_loop::LoopError;
use crate::planner::{GoalSpec, Plan, Planner, PlannerConfig, RhoFacts};

/// What one episode of any agent produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub reward: f64,
    /// Length of the first plan executed; 0 for agents without plans.
    pub plan_len: usize,
    pub failures: usize,
    pub quality: Option<f64>,
}

impl Episode {
    fn empty() -> Self {
        Episode {
            reward: 0.0,
            plan_len: 0,
            failures: 0,
            quality: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub alpha: Schedule,
    pub gamma: f64,
    pub epsilon: Schedule,
    pub episode_cap: usize,
}

fn argmax(values: &[f64], allowed: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (i, &v) in values.iter().enumerate() {
        if allowed(i) && (best == usize::MAX || v > values[best]) {
            best = i;
        }
    }
    best
}

fn max_allowed(values: &[f64], allowed: impl Fn(usize) -> bool) -> f64 {
    let i = argmax(values, allowed);
    if i == usize::MAX {
        0.0
    } else {
        values[i]
    }
}

/// Flat tabular Q-learning over primitive actions, ε-greedy with ties
/// broken toward the lowest action.
#[derive(Debug, Clone)]
pub struct QAgent {
    q: Vec<f64>,
    actions: usize,
    cfg: QConfig,
    episode: usize,
}

impl QAgent {
    pub fn new(states: usize, actions: usize, cfg: QConfig) -> Self {
        QAgent {
            q: vec![0.0; states * actions],
            actions,
            cfg,
            episode: 0,
        }
    }

    pub fn value(&self, x: usize, a: usize) -> f64 {
        self.q[x * self.actions + a]
    }

    fn row(&self, x: usize) -> &[f64] {
        &self.q[x * self.actions..(x + 1) * self.actions]
    }

    pub fn greedy(&self, x: usize) -> usize {
        argmax(self.row(x), |_| true)
    }

    /// `next` is `None` when the step ended the episode.
    pub fn update(&mut self, x: usize, a: usize, r: f64, next: Option<usize>, alpha: f64) {
        let target = r + next.map_or(0.0, |y| self.cfg.gamma * max_allowed(self.row(y), |_| true));
        let q = &mut self.q[x * self.actions + a];
        *q += alpha * (target - *q);
    }

    pub fn run_episode<E: Environment, R: Rng>(&mut self, env: &mut E, rng: &mut R) -> Result<Episode, EnvError> {
        let alpha = self.cfg.alpha.value(self.episode);
        let epsilon = self.cfg.epsilon.value(self.episode);
        self.episode += 1;
        let mut ep = Episode::empty();
        let mut s = env.reset();
        for _ in 0..self.cfg.episode_cap {
            let x = env.state_index(&s);
            let a = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                rng.gen_range(0..self.actions)
            } else {
                self.greedy(x)
            };
            let step = env.step(EnvAction(a as u16))?;
            ep.reward += step.reward;
            ep.failures += step.failed as usize;
            let next = (!step.done).then(|| env.state_index(&step.next));
            self.update(x, a, step.reward, next, alpha);
            s = step.next;
            if step.done {
                break;
            }
        }
        Ok(ep)
    }

    /// Greedy episode without learning.
    pub fn rollout<E: Environment>(&self, env: &mut E) -> Result<Episode, EnvError> {
        let mut ep = Episode::empty();
        let mut s = env.reset();
        for _ in 0..self.cfg.episode_cap {
            let step = env.step(EnvAction(self.greedy(env.state_index(&s)) as u16))?;
            ep.reward += step.reward;
            ep.failures += step.failed as usize;
            s = step.next;
            if step.done {
                break;
            }
        }
        Ok(ep)
    }
}

/// Plans shortest plans (every gain reward left at its default), executes
/// options with a uniformly random intra-option policy, never learns, and
/// replans from wherever an option leaves it.
#[derive(Debug, Clone)]
pub struct PlanningAgent {
    g: Arc<GroundDomain>,
    catalog: ActionCatalog,
    goal: Vec<GroundAtom>,
    planner: Planner,
    facts: RhoFacts,
    tables: LearningTables,
    step_cap: usize,
    replan_cap: usize,
    plans: Vec<Plan>,
    /// Facts never change, so the plan from a state never does either.
    memo: HashMap<SymbolicState, Option<Plan>>,
}

impl PlanningAgent {
    pub fn new(
        g: Arc<GroundDomain>,
        catalog: ActionCatalog,
        goal: Vec<GroundAtom>,
        planner: PlannerConfig,
        step_cap: usize,
        replan_cap: usize,
    ) -> Self {
        PlanningAgent {
            g,
            catalog,
            goal,
            planner: Planner::new(planner),
            facts: RhoFacts::default(),
            tables: LearningTables::new(),
            step_cap,
            replan_cap,
            plans: Vec::new(),
            memo: HashMap::new(),
        }
    }

    /// Distinct plans executed so far, in first-use order.
    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn run_episode<E: Environment, R: Rng>(&mut self, env: &mut E, rng: &mut R) -> Result<Episode, LoopError> {
        let mut ep = Episode::empty();
        env.reset();
        let rates = Rates { alpha: 0.0, beta: 0.0 };
        for attempt in 0..=self.replan_cap {
            if env.is_done() {
                break;
            }
            let init = env.abstract_state(env.state());
            if !self.memo.contains_key(&init) {
                let goal = GoalSpec::new(self.goal.clone());
                let found = self.planner.plan(&self.g, &init, &goal, &self.facts)?.plan;
                self.memo.insert(init.clone(), found);
            }
            let Some(plan) = self.memo[&init].clone() else {
                break;
            };
            if attempt == 0 {
                ep.plan_len = plan.len();
            }
            if !self.plans.contains(&plan) {
                self.plans.push(plan.clone());
            }
            let mut finished = true;
            for o in &map_plan_to_options(&self.g, &plan, &self.catalog, self.step_cap)? {
                let run = run_option(o, env, &mut self.tables, rates, IntraPolicy::UniformRandom, false, rng)?;
                ep.reward += run.reward;
                ep.failures += run.failures;
                if run.outcome != OptionOutcome::Terminated {
                    finished = false;
                    break;
                }
            }
            if finished {
                break;
            }
        }
        Ok(ep)
    }
}

/// Hierarchical Q-learning on Taxi over the options go-to-depot(d),
/// pickup and dropoff, with MAXQ-style value decomposition: an option's
/// value at `x` is its own expected reward (the go-to option's best move
/// value, or the primitive's learned reward) plus a learned completion
/// value, so the top level always sees the current sub-policies. Go-to
/// moves are learned by Q-learning on the environment reward until the
/// depot is reached, indexed by taxi cell only so that navigation
/// experience is shared across passenger configurations.
#[derive(Debug, Clone)]
pub struct HrlAgent {
    cfg: QConfig,
    option_cap: usize,
    depots: Vec<(u8, u8)>,
    /// Completion values, `states × (depots + 2)`.
    completion: Vec<f64>,
    /// Pickup and dropoff rewards, `states × 2`.
    prim: Vec<f64>,
    /// Per depot, move values `cells × 4`.
    goto: Vec<Vec<f64>>,
    cols: usize,
    episode: usize,
}

const MOVES: usize = 4;

impl HrlAgent {
    pub fn new(env: &Taxi, cfg: QConfig, option_cap: usize) -> Self {
        let states = env.state_count();
        let (rows, cols) = (env.map().rows as usize, env.map().cols as usize);
        let depots: Vec<(u8, u8)> = env.map().depots.iter().map(|d| d.0).collect();
        HrlAgent {
            cfg,
            option_cap,
            completion: vec![0.0; states * (depots.len() + 2)],
            prim: vec![0.0; states * 2],
            goto: vec![vec![0.0; rows * cols * MOVES]; depots.len()],
            cols,
            depots,
            episode: 0,
        }
    }

    fn cell(&self, row: u8, col: u8) -> usize {
        (row as usize - 1) * self.cols + col as usize - 1
    }

    fn options(&self) -> usize {
        self.depots.len() + 2
    }

    /// Go-to options are unavailable at their own depot.
    fn available(&self, s: &TaxiState, o: usize) -> bool {
        o >= self.depots.len() || self.depots[o] != (s.row, s.col)
    }

    fn moves(&self, d: usize, c: usize) -> &[f64] {
        &self.goto[d][c * MOVES..(c + 1) * MOVES]
    }

    /// Decomposed value of option `o` in state `s` with index `x`.
    pub fn option_value(&self, s: &TaxiState, x: usize, o: usize) -> f64 {
        let own = if o < self.depots.len() {
            max_allowed(self.moves(o, self.cell(s.row, s.col)), |_| true)
        } else {
            self.prim[x * 2 + o - self.depots.len()]
        };
        own + self.completion[x * self.options() + o]
    }

    fn best_option(&self, s: &TaxiState, x: usize) -> (usize, f64) {
        let values: Vec<f64> = (0..self.options()).map(|o| self.option_value(s, x, o)).collect();
        let o = argmax(&values, |o| self.available(s, o));
        (o, values[o])
    }

    pub fn run_episode<R: Rng>(&mut self, env: &mut Taxi, rng: &mut R) -> Result<Episode, EnvError> {
        let alpha = self.cfg.alpha.value(self.episode);
        let epsilon = self.cfg.epsilon.value(self.episode);
        self.episode += 1;
        let k = self.options();
        let mut ep = Episode::empty();
        env.reset();
        let mut steps = 0;
        while !env.is_done() && steps < self.cfg.episode_cap {
            let s0 = *env.state();
            let x = env.state_index(&s0);
            let o = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                let avail: Vec<usize> = (0..k).filter(|&o| self.available(&s0, o)).collect();
                avail[rng.gen_range(0..avail.len())]
            } else {
                self.best_option(&s0, x).0
            };
            let (mut discount, mut raw) = (1.0, 0.0);
            if o < self.depots.len() {
                let target = self.depots[o];
                let mut taken = 0;
                while taken < self.option_cap && steps < self.cfg.episode_cap && !env.is_done() {
                    let s = *env.state();
                    if (s.row, s.col) == target {
                        break;
                    }
                    let c = self.cell(s.row, s.col);
                    let a = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                        rng.gen_range(0..MOVES)
                    } else {
                        argmax(self.moves(o, c), |_| true)
                    };
                    let step = env.step(EnvAction(a as u16))?;
                    let arrived = (step.next.row, step.next.col) == target;
                    let next = if arrived || step.done {
                        0.0
                    } else {
                        max_allowed(self.moves(o, self.cell(step.next.row, step.next.col)), |_| true)
                    };
                    let q = &mut self.goto[o][c * MOVES + a];
                    *q += alpha * (step.reward + self.cfg.gamma * next - *q);
                    raw += step.reward;
                    discount *= self.cfg.gamma;
                    ep.failures += step.failed as usize;
                    taken += 1;
                    steps += 1;
                }
            } else {
                let j = o - self.depots.len();
                let step = env.step(if j == 0 { PICKUP } else { DROPOFF })?;
                let p = &mut self.prim[x * 2 + j];
                *p += alpha * (step.reward - *p);
                raw = step.reward;
                discount = self.cfg.gamma;
                ep.failures += step.failed as usize;
                steps += 1;
            }
            ep.reward += raw;
            let next = if env.is_done() {
                0.0
            } else {
                let s1 = *env.state();
                self.best_option(&s1, env.state_index(&s1)).1
            };
            let c = &mut self.completion[x * k + o];
            *c += alpha * (discount * next - *c);
        }
        Ok(ep)
    }
}
