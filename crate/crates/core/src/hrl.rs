//! Options realizing symbolic transitions, and hierarchical average-reward
//! (R-)learning at two levels: inside each option over primitive actions,
//! and over symbolic transitions when an option terminates.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use rand::Rng;
use thiserror::Error;

use crate::envs::{EnvAction, EnvError, Environment};
use crate::grounding::{ActionId, GroundDomain, GroundingError, SymbolicState, SymbolicTransition};
use crate::planner::Plan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HrlError {
    #[error("no realization for symbolic action `{0}`")]
    UnknownAction(String),
    #[error("option for `{action}` is not available in the current state")]
    NotAvailable { action: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("snapshot line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
}

/// Admissible primitive actions per printed ground action, e.g.
/// `push -> [push(0), ..., push(60)]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionCatalog {
    map: BTreeMap<String, Vec<EnvAction>>,
}

impl ActionCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, action: impl Into<String>, realizations: Vec<EnvAction>) {
        self.map.insert(action.into(), realizations);
    }

    pub fn get(&self, action: &str) -> Option<&[EnvAction]> {
        self.map.get(action).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionSpec {
    pub transition: SymbolicTransition,
    pub admissible: Vec<EnvAction>,
    pub step_cap: usize,
}

impl OptionSpec {
    pub fn initiation(&self) -> &SymbolicState {
        &self.transition.from
    }

    pub fn terminates(&self, s: &SymbolicState) -> bool {
        *s == self.transition.to
    }
}

pub const DEFAULT_STEP_CAP: usize = 100;

pub fn map_transition_to_option(
    g: &GroundDomain,
    t: &SymbolicTransition,
    catalog: &ActionCatalog,
    step_cap: usize,
) -> Result<OptionSpec, HrlError> {
    let name = g.action_name(t.action);
    let admissible = catalog.get(&name).ok_or(HrlError::UnknownAction(name))?;
    Ok(OptionSpec {
        transition: t.clone(),
        admissible: admissible.to_vec(),
        step_cap,
    })
}

pub fn map_plan_to_options(
    g: &GroundDomain,
    p: &Plan,
    catalog: &ActionCatalog,
    step_cap: usize,
) -> Result<Vec<OptionSpec>, HrlError> {
    p.transitions()
        .map(|(s, a, t)| {
            let tr = SymbolicTransition {
                from: s.clone(),
                action: a,
                to: t.clone(),
            };
            map_transition_to_option(g, &tr, catalog, step_cap)
        })
        .collect()
}

/// Anneals from `initial` to `end` over `horizon` episodes: geometrically
/// when both ends are positive, linearly otherwise; constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub initial: f64,
    pub end: f64,
    pub horizon: usize,
}

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Schedule {
            initial: v,
            end: v,
            horizon: 0,
        }
    }

    pub fn value(&self, episode: usize) -> f64 {
        if episode >= self.horizon {
            return self.end;
        }
        let frac = episode as f64 / self.horizon as f64;
        if self.initial > 0.0 && self.end > 0.0 {
            self.initial * (self.end / self.initial).powf(frac)
        } else {
            self.initial + (self.end - self.initial) * frac
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningConfig {
    pub alpha: Schedule,
    pub beta: f64,
    pub epsilon_intra: Schedule,
    pub step_cap: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            alpha: Schedule {
                initial: 1.0,
                end: 0.01,
                horizon: 500,
            },
            beta: 0.5,
            epsilon_intra: Schedule {
                initial: 0.1,
                end: 0.0,
                horizon: 500,
            },
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub alpha: f64,
    pub beta: f64,
}

impl LearningConfig {
    pub fn rates(&self, episode: usize) -> Rates {
        Rates {
            alpha: self.alpha.value(episode),
            beta: self.beta,
        }
    }
}

/// Per-option tables over `(env state index, primitive action)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntraTable {
    pub r: HashMap<(usize, EnvAction), f64>,
    pub rho: HashMap<(usize, EnvAction), f64>,
}

impl IntraTable {
    pub fn r(&self, x: usize, a: EnvAction) -> f64 {
        self.r.get(&(x, a)).copied().unwrap_or(0.0)
    }

    pub fn rho(&self, x: usize, a: EnvAction) -> f64 {
        self.rho.get(&(x, a)).copied().unwrap_or(0.0)
    }

    fn max_r(&self, x: usize, admissible: &[EnvAction]) -> f64 {
        if admissible.is_empty() {
            return 0.0;
        }
        admissible
            .iter()
            .map(|&a| self.r(x, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Learned values; missing entries read as 0.
#[derive(Debug, Clone, Default)]
pub struct LearningTables {
    pub option_r: HashMap<(SymbolicState, ActionId), f64>,
    pub option_rho: HashMap<(SymbolicState, ActionId), f64>,
    pub intra: HashMap<SymbolicTransition, IntraTable>,
    executable: HashMap<SymbolicState, Vec<ActionId>>,
}

impl LearningTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn r(&self, s: &SymbolicState, a: ActionId) -> f64 {
        self.option_r.get(&(s.clone(), a)).copied().unwrap_or(0.0)
    }

    pub fn rho(&self, s: &SymbolicState, a: ActionId) -> f64 {
        self.option_rho.get(&(s.clone(), a)).copied().unwrap_or(0.0)
    }

    pub fn intra_table(&self, t: &SymbolicTransition) -> Option<&IntraTable> {
        self.intra.get(t)
    }

    /// R(x,ã) ← (1−α)R(x,ã) + α(r − ρ(x,ã) + max R(y,·)) and
    /// ρ(x,ã) ← (1−β)ρ(x,ã) + β(r + max R(y,·) − max R(x,·)),
    /// maxima over the option's admissible actions, all from old values.
    pub fn intra_option_update(
        &mut self,
        option: &OptionSpec,
        x: usize,
        a: EnvAction,
        r: f64,
        y: usize,
        rates: Rates,
    ) {
        let t = self.intra.entry(option.transition.clone()).or_default();
        let max_y = t.max_r(y, &option.admissible);
        let max_x = t.max_r(x, &option.admissible);
        let (r_old, rho_old) = (t.r(x, a), t.rho(x, a));
        t.r.insert((x, a), (1.0 - rates.alpha) * r_old + rates.alpha * (r - rho_old + max_y));
        t.rho.insert((x, a), (1.0 - rates.beta) * rho_old + rates.beta * (r + max_y - max_x));
    }

    /// Same update one level up, with the option's cumulative reward and
    /// maxima over the ground actions executable in each symbolic state.
    pub fn option_terminal_update(
        &mut self,
        g: &GroundDomain,
        s_prev: &SymbolicState,
        a_prev: ActionId,
        r_cum: f64,
        s_next: &SymbolicState,
        rates: Rates,
    ) -> Result<(), GroundingError> {
        let max_next = self.max_option_r(g, s_next)?;
        let max_prev = self.max_option_r(g, s_prev)?;
        let key = (s_prev.clone(), a_prev);
        let r_old = self.option_r.get(&key).copied().unwrap_or(0.0);
        let rho_old = self.option_rho.get(&key).copied().unwrap_or(0.0);
        self.option_r.insert(
            key.clone(),
            (1.0 - rates.alpha) * r_old + rates.alpha * (r_cum - rho_old + max_next),
        );
        self.option_rho.insert(
            key,
            (1.0 - rates.beta) * rho_old + rates.beta * (r_cum + max_next - max_prev),
        );
        Ok(())
    }

    /// Max of R over executable actions; 0 when none is executable.
    pub fn max_option_r(&mut self, g: &GroundDomain, s: &SymbolicState) -> Result<f64, GroundingError> {
        if !self.executable.contains_key(s) {
            let acts = g.successors(s)?.into_iter().map(|(a, _)| a).collect();
            self.executable.insert(s.clone(), acts);
        }
        let acts = &self.executable[s];
        if acts.is_empty() {
            return Ok(0.0);
        }
        Ok(acts
            .iter()
            .map(|&a| self.option_r.get(&(s.clone(), a)).copied().unwrap_or(0.0))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Sum of option-level gain rewards along the plan.
pub fn plan_quality(p: &Plan, tables: &LearningTables) -> f64 {
    p.transitions().fold(0.0, |q, (s, a, _)| q + tables.rho(s, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntraPolicy {
    /// Greedy on the option's R table (lowest action on ties), random
    /// admissible action with probability `epsilon`.
    EpsilonGreedy { epsilon: f64 },
    UniformRandom,
    /// Always the given action (for forced-failure experiments).
    Fixed(EnvAction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionOutcome {
    Terminated,
    StepCap,
    /// The abstract state left both the source and the target state.
    Deviated,
    /// The environment ended the episode before termination.
    EpisodeEnded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionRun {
    pub reward: f64,
    pub failures: usize,
    pub steps: usize,
    pub outcome: OptionOutcome,
    pub end: SymbolicState,
    pub trace: Vec<(EnvAction, f64)>,
}

pub fn greedy_action(table: Option<&IntraTable>, x: usize, admissible: &[EnvAction]) -> EnvAction {
    let mut best = admissible[0];
    let mut best_v = f64::NEG_INFINITY;
    for &a in admissible {
        let v = table.map_or(0.0, |t| t.r(x, a));
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

/// Executes one option until its target abstract state is reached or it
/// gives up, updating the intra-option tables when `learn` is set.
pub fn run_option<E: Environment, R: Rng>(
    option: &OptionSpec,
    env: &mut E,
    tables: &mut LearningTables,
    rates: Rates,
    policy: IntraPolicy,
    learn: bool,
    rng: &mut R,
) -> Result<OptionRun, HrlError> {
    let unavailable = || HrlError::NotAvailable {
        action: format!("{:?}", option.transition.action),
    };
    let mut abs = env.abstract_state(env.state());
    if abs != *option.initiation() {
        return Err(unavailable());
    }
    let mut run = OptionRun {
        reward: 0.0,
        failures: 0,
        steps: 0,
        outcome: OptionOutcome::StepCap,
        end: abs.clone(),
        trace: Vec::new(),
    };
    if option.admissible.is_empty() {
        return Err(unavailable());
    }
    loop {
        if option.terminates(&abs) {
            run.outcome = OptionOutcome::Terminated;
            break;
        }
        if abs != *option.initiation() {
            run.outcome = OptionOutcome::Deviated;
            break;
        }
        if env.is_done() {
            run.outcome = OptionOutcome::EpisodeEnded;
            break;
        }
        if run.steps >= option.step_cap {
            run.outcome = OptionOutcome::StepCap;
            break;
        }
        let x = env.state_index(env.state());
        let a = match policy {
            IntraPolicy::Fixed(a) => a,
            IntraPolicy::UniformRandom => option.admissible[rng.gen_range(0..option.admissible.len())],
            IntraPolicy::EpsilonGreedy { epsilon } => {
                if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                    option.admissible[rng.gen_range(0..option.admissible.len())]
                } else {
                    greedy_action(tables.intra.get(&option.transition), x, &option.admissible)
                }
            }
        };
        let step = env.step(a)?;
        let y = env.state_index(&step.next);
        if learn {
            tables.intra_option_update(option, x, a, step.reward, y, rates);
        }
        run.reward += step.reward;
        run.failures += step.failed as usize;
        run.steps += 1;
        run.trace.push((a, step.reward));
        abs = env.abstract_state(&step.next);
    }
    run.end = abs;
    Ok(run)
}

/// `RHO <state-id> <action> <value>` lines, then `R` lines, each sorted.
pub fn export_snapshot(g: &GroundDomain, t: &LearningTables) -> String {
    let lines = |tag: &str, m: &HashMap<(SymbolicState, ActionId), f64>| {
        let mut v: Vec<String> = m
            .iter()
            .map(|((s, a), x)| format!("{} {} {} {}", tag, g.format_state(s), g.action_name(*a), x))
            .collect();
        v.sort();
        v
    };
    let mut out = String::new();
    for l in lines("RHO", &t.option_rho).into_iter().chain(lines("R", &t.option_r)) {
        let _ = writeln!(out, "{}", l);
    }
    out
}

pub fn import_snapshot(g: &GroundDomain, text: &str) -> Result<LearningTables, HrlError> {
    let mut t = LearningTables::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let bad = |msg: String| HrlError::Snapshot { line: i + 1, msg };
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", parts.len())));
        }
        let s = g.parse_state(parts[1]).map_err(|e| bad(e.to_string()))?;
        let a = g.action_by_name(parts[2]).map_err(|e| bad(e.to_string()))?;
        let v: f64 = parts[3].parse().map_err(|_| bad(format!("bad value `{}`", parts[3])))?;
        match parts[0] {
            "RHO" => t.option_rho.insert((s, a), v),
            "R" => t.option_r.insert((s, a), v),
            other => return Err(bad(format!("unknown tag `{}`", other))),
        };
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_language::parse_action_description;
    use crate::envs::{GridMap, GridWorld, PUSH_BASE};
    use crate::grounding::ground;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn option(admissible: Vec<EnvAction>) -> OptionSpec {
        let s = SymbolicState(vec![0]);
        OptionSpec {
            transition: SymbolicTransition {
                from: s.clone(),
                action: ActionId(0),
                to: SymbolicState(vec![1]),
            },
            admissible,
            step_cap: 10,
        }
    }

    #[test]
    fn unit_rates_closed_form() {
        let o = option(vec![EnvAction(0), EnvAction(1)]);
        let mut t = LearningTables::new();
        t.intra_option_update(&o, 0, EnvAction(0), 5.0, 1, Rates { alpha: 1.0, beta: 1.0 });
        let it = t.intra_table(&o.transition).unwrap();
        assert_eq!((it.r(0, EnvAction(0)), it.rho(0, EnvAction(0))), (5.0, 5.0));
    }

    #[test]
    fn zero_rates_leave_values() {
        let o = option(vec![EnvAction(0)]);
        let mut t = LearningTables::new();
        t.intra_option_update(&o, 0, EnvAction(0), 5.0, 1, Rates { alpha: 0.0, beta: 0.0 });
        let it = t.intra_table(&o.transition).unwrap();
        assert_eq!((it.r(0, EnvAction(0)), it.rho(0, EnvAction(0))), (0.0, 0.0));
    }

    #[test]
    fn schedules() {
        let s = Schedule {
            initial: 1.0,
            end: 0.01,
            horizon: 100,
        };
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(50) - 0.1).abs() < 1e-12);
        assert_eq!(s.value(1000), 0.01);
        let e = Schedule {
            initial: 0.1,
            end: 0.0,
            horizon: 10,
        };
        assert!((e.value(5) - 0.05).abs() < 1e-12);
    }

    fn door_option() -> (GroundDomain, GridWorld, OptionSpec) {
        let g = ground(&parse_action_description(include_str!("../data/gridworld.bc")).unwrap()).unwrap();
        let mut init = GridWorld::fresh(9, 9);
        init.active = true;
        let w = GridWorld::with_initial(GridMap::standard(), &g, init).unwrap();
        let from = w.abstract_state(w.state());
        let push = g.action_by_name("push").unwrap();
        let to = g.successor(&from, push).unwrap().state().unwrap();
        let t = SymbolicTransition { from, action: push, to };
        let o = map_transition_to_option(&g, &t, &GridWorld::catalog(), 100).unwrap();
        (g, w, o)
    }

    #[test]
    fn forced_bad_push_retries_until_cap() {
        let (_, mut w, o) = door_option();
        assert_eq!(o.admissible.len(), 61);
        let mut t = LearningTables::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rates = Rates { alpha: 0.5, beta: 0.5 };
        let run = run_option(&o, &mut w, &mut t, rates, IntraPolicy::Fixed(EnvAction(PUSH_BASE + 10)), true, &mut rng)
            .unwrap();
        assert_eq!(run.outcome, OptionOutcome::StepCap);
        assert_eq!((run.steps, run.failures), (100, 100));
        assert_eq!(run.reward, -1000.0);
    }

    #[test]
    fn learned_push_succeeds_first_try() {
        let (_, mut w, o) = door_option();
        let mut t = LearningTables::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rates = Rates { alpha: 0.5, beta: 0.5 };
        for _ in 0..30 {
            w.reset();
            let run = run_option(&o, &mut w, &mut t, rates, IntraPolicy::EpsilonGreedy { epsilon: 0.1 }, true, &mut rng)
                .unwrap();
            assert_eq!(run.outcome, OptionOutcome::Terminated);
        }
        w.reset();
        let run = run_option(&o, &mut w, &mut t, rates, IntraPolicy::EpsilonGreedy { epsilon: 0.0 }, false, &mut rng)
            .unwrap();
        assert_eq!((run.steps, run.failures, run.reward), (1, 0, -1.0));
        let f = run.trace[0].0 .0 - PUSH_BASE;
        assert!((20..40).contains(&f));
    }

    #[test]
    fn unavailable_option_refused() {
        let (_, mut w, o) = door_option();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        w.step(EnvAction(2)).unwrap();
        let err = run_option(&o, &mut w, &mut LearningTables::new(), Rates { alpha: 1.0, beta: 1.0 },
            IntraPolicy::UniformRandom, true, &mut rng);
        assert!(matches!(err, Err(HrlError::NotAvailable { .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let (g, _, o) = door_option();
        let mut t = LearningTables::new();
        let tr = &o.transition;
        t.option_terminal_update(&g, &tr.from, tr.action, -3.25, &tr.to, Rates { alpha: 1.0, beta: 1.0 })
            .unwrap();
        assert_eq!(t.rho(&tr.from, tr.action), -3.25);
        let text = export_snapshot(&g, &t);
        assert!(text.starts_with("RHO {pos(9,9),dooractive,~dooropen} push -3.25\n"));
        let back = import_snapshot(&g, &text).unwrap();
        assert_eq!(back.option_rho, t.option_rho);
        assert_eq!(back.option_r, t.option_r);
        assert!(matches!(import_snapshot(&g, "RHO x"), Err(HrlError::Snapshot { line: 1, .. })));
    }
}
