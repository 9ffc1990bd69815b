//! The plan–execute–observe–learn cycle: plan with the current gain-reward
//! facts, execute the plan's options while learning, score the plan by its
//! learned gain rewards, require the next plan to beat that score, and stop
//! once the planner proves no better plan exists.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::envs::Environment;
use crate::grounding::{ActionId, GroundAtom, GroundDomain, GroundingError, SymbolicState};
use crate::hrl::{
    map_plan_to_options, plan_quality, run_option, ActionCatalog, HrlError, IntraPolicy,
    LearningConfig, LearningTables, OptionOutcome,
};
use crate::planner::{GoalSpec, Plan, Planner, PlannerConfig, QualityBound, RhoFacts};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Hrl(#[from] HrlError),
    #[error("no plan reaches the goal from the initial state")]
    NoPlan,
    #[error("planner returned an invalid plan")]
    InvalidPlan,
}

#[derive(Debug, Clone, Copy)]
pub struct LoopConfig {
    pub epsilon_plan: f64,
    pub max_episodes: usize,
    pub learning: LearningConfig,
    pub planner: PlannerConfig,
    /// Gain reward assumed for pairs without a learned fact.
    pub inf_value: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            epsilon_plan: 0.2,
            max_episodes: 2000,
            learning: LearningConfig::default(),
            planner: PlannerConfig::default(),
            inf_value: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub cum_reward: f64,
    pub plan_len: usize,
    pub failures: usize,
    /// Learned quality of the executed plan; `None` if execution failed.
    pub quality: Option<f64>,
    pub planned: bool,
    pub converged: bool,
}

/// One fact per plan transition, carrying the current gain reward.
pub fn export_facts(tables: &LearningTables, p: &Plan) -> Vec<((SymbolicState, ActionId), f64)> {
    p.transitions()
        .map(|(s, a, _)| ((s.clone(), a), tables.rho(s, a)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PeorlAgent {
    g: Arc<GroundDomain>,
    catalog: ActionCatalog,
    cfg: LoopConfig,
    planner: Planner,
    goal_atoms: Vec<GroundAtom>,
    pub constraint: QualityBound,
    pub facts: RhoFacts,
    pub tables: LearningTables,
    current: Option<Plan>,
    force_plan: bool,
    converged: bool,
    episode: usize,
    /// Distinct plans executed successfully, in first-execution order.
    executed: Vec<Plan>,
}

impl PeorlAgent {
    pub fn new(g: Arc<GroundDomain>, catalog: ActionCatalog, goal_atoms: Vec<GroundAtom>, cfg: LoopConfig) -> Self {
        PeorlAgent {
            g,
            catalog,
            planner: Planner::new(cfg.planner),
            cfg,
            goal_atoms,
            constraint: QualityBound::Unbounded,
            facts: RhoFacts::new(cfg.inf_value),
            tables: LearningTables::new(),
            current: None,
            force_plan: true,
            converged: false,
            episode: 0,
            executed: Vec::new(),
        }
    }

    pub fn goal_atoms(&self) -> &[GroundAtom] {
        &self.goal_atoms
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn current_plan(&self) -> Option<&Plan> {
        self.current.as_ref()
    }

    /// The converged plan, or else the executed plan with the best quality
    /// under the current tables.
    pub fn final_plan(&self) -> Option<&Plan> {
        if self.converged {
            return self.current.as_ref();
        }
        let mut best: Option<(&Plan, f64)> = None;
        for p in &self.executed {
            let q = plan_quality(p, &self.tables);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((p, q));
            }
        }
        best.map(|(p, _)| p)
    }

    fn plan_from(&mut self, init: &SymbolicState) -> Result<bool, LoopError> {
        let goal = GoalSpec {
            atoms: self.goal_atoms.clone(),
            bound: self.constraint,
        };
        let out = self.planner.plan(&self.g, init, &goal, &self.facts)?;
        match out.plan {
            Some(p) => {
                if !p.validate(&self.g, &self.goal_atoms) {
                    return Err(LoopError::InvalidPlan);
                }
                self.current = Some(p);
                Ok(true)
            }
            None if out.truncated => Ok(false),
            None => {
                if self.current.is_none() {
                    return Err(LoopError::NoPlan);
                }
                self.converged = true;
                Ok(false)
            }
        }
    }

    /// One iteration: maybe plan, then execute the current plan.
    pub fn run_episode<E: Environment, R: Rng>(&mut self, env: &mut E, rng: &mut R) -> Result<EpisodeRecord, LoopError> {
        env.reset();
        let init = env.abstract_state(env.state());
        let mut planned = false;
        if !self.converged {
            let stale = self.current.as_ref().is_none_or(|p| p.states[0] != init);
            let coin = rng.gen::<f64>() < self.cfg.epsilon_plan;
            if self.force_plan || stale || coin {
                planned = self.plan_from(&init)?;
            }
            if self.current.is_none() {
                return Err(LoopError::NoPlan);
            }
        }
        let plan = self.current.clone().ok_or(LoopError::NoPlan)?;
        let rec = self.execute(&plan, env, rng)?;
        let mut record = EpisodeRecord {
            planned,
            converged: self.converged,
            ..rec
        };
        self.force_plan = record.quality.is_none();
        if let Some(q) = record.quality {
            if !self.converged {
                self.constraint = QualityBound::GreaterThan(q);
            }
            for (k, v) in export_facts(&self.tables, &plan) {
                self.facts.set(k.0, k.1, v);
            }
            if !self.executed.contains(&plan) {
                self.executed.push(plan);
            }
        }
        record.episode = self.episode;
        self.episode += 1;
        Ok(record)
    }

    /// Executes `plan` greedily without learning; `quality` is set when
    /// every option reached its target.
    pub fn rollout<E: Environment>(&mut self, plan: &Plan, env: &mut E) -> Result<EpisodeRecord, LoopError> {
        // greedy choice never draws from the generator
        self.evaluate(plan, env, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
    }

    /// Executes `plan` ε-greedily without learning.
    pub fn evaluate<E: Environment, R: Rng>(
        &mut self,
        plan: &Plan,
        env: &mut E,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<EpisodeRecord, LoopError> {
        env.reset();
        let rates = self.cfg.learning.rates(self.episode);
        let options = map_plan_to_options(&self.g, plan, &self.catalog, self.cfg.learning.step_cap)?;
        let mut rec = EpisodeRecord {
            episode: self.episode,
            cum_reward: 0.0,
            plan_len: plan.len(),
            failures: 0,
            quality: Some(plan_quality(plan, &self.tables)),
            planned: false,
            converged: self.converged,
        };
        for o in &options {
            let run = run_option(o, env, &mut self.tables, rates, IntraPolicy::EpsilonGreedy { epsilon }, false, rng)?;
            rec.cum_reward += run.reward;
            rec.failures += run.failures;
            if run.outcome != OptionOutcome::Terminated {
                rec.quality = None;
                break;
            }
        }
        Ok(rec)
    }

    /// Executes `plan` with learning and advances the episode count, but
    /// neither plans nor touches the constraint or the facts.
    pub fn execute_fixed<E: Environment, R: Rng>(
        &mut self,
        plan: &Plan,
        env: &mut E,
        rng: &mut R,
    ) -> Result<EpisodeRecord, LoopError> {
        env.reset();
        let mut rec = self.execute(plan, env, rng)?;
        rec.episode = self.episode;
        self.episode += 1;
        Ok(rec)
    }

    fn execute<E: Environment, R: Rng>(&mut self, plan: &Plan, env: &mut E, rng: &mut R) -> Result<EpisodeRecord, LoopError> {
        let rates = self.cfg.learning.rates(self.episode);
        let policy = IntraPolicy::EpsilonGreedy {
            epsilon: self.cfg.learning.epsilon_intra.value(self.episode),
        };
        let options = map_plan_to_options(&self.g, plan, &self.catalog, self.cfg.learning.step_cap)?;
        let mut rec = EpisodeRecord {
            episode: self.episode,
            cum_reward: 0.0,
            plan_len: plan.len(),
            failures: 0,
            quality: None,
            planned: false,
            converged: false,
        };
        let mut ok = true;
        for (i, o) in options.iter().enumerate() {
            let run = run_option(o, env, &mut self.tables, rates, policy, true, rng)?;
            rec.cum_reward += run.reward;
            rec.failures += run.failures;
            if run.outcome != OptionOutcome::Terminated {
                ok = false;
                break;
            }
            let t = &o.transition;
            // episodes restart where the plan started, so the goal's
            // successor for the average-reward update is the initial state
            let next = if i + 1 == options.len() { &plan.states[0] } else { &t.to };
            self.tables
                .option_terminal_update(&self.g, &t.from, t.action, run.reward, next, rates)?;
        }
        if ok {
            rec.quality = Some(plan_quality(plan, &self.tables));
        }
        Ok(rec)
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub plan: Option<Plan>,
    pub converged: bool,
    pub log: Vec<EpisodeRecord>,
}

/// Runs iterations until the planner finds no better plan or
/// `max_episodes` is reached.
pub fn peorl_train<E: Environment, R: Rng>(
    agent: &mut PeorlAgent,
    env: &mut E,
    rng: &mut R,
) -> Result<TrainResult, LoopError> {
    let mut log = Vec::new();
    while !agent.converged() && log.len() < agent.cfg.max_episodes {
        log.push(agent.run_episode(env, rng)?);
    }
    Ok(TrainResult {
        plan: agent.final_plan().cloned(),
        converged: agent.converged(),
        log,
    })
}
