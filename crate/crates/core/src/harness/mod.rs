//! Experiment plumbing: bundled domains, baseline agents, seeded runs and
//! CSV logs.

mod agents;
mod config;

use std::io::{self, Write};
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

pub use agents::{Episode, HrlAgent, PlanningAgent, QAgent, QConfig};
pub use config::{
    parse_config_text, parse_schedule, parse_seeds, AgentKind, ConfigError, DomainKind, ExperimentConfig,
};

use crate::action_language::{parse_action_description, Value};
use crate::envs::{EnvError, Environment, GridMap, GridWorld, Scenario, Taxi, TaxiMap};
use crate::grounding::{ground, GroundAtom, GroundDomain, GroundingError};
use crate::hrl::{export_snapshot, ActionCatalog, LearningConfig};
use crate::peorl_loop::{LoopConfig, LoopError, PeorlAgent};
use crate::planner::{Plan, PlannerConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bundled domain does not parse: {0}")]
    Domain(String),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn ground_domain(kind: DomainKind) -> Result<Arc<GroundDomain>, HarnessError> {
    let desc = parse_action_description(kind.source()).map_err(|d| {
        HarnessError::Domain(d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    Ok(Arc::new(ground(&desc)?))
}

/// A seeded environment together with its symbolic side.
#[derive(Debug, Clone)]
pub struct Setup<E> {
    pub g: Arc<GroundDomain>,
    pub env: E,
    pub catalog: ActionCatalog,
    pub goal: Vec<GroundAtom>,
}

fn goal_atom(g: &GroundDomain, fluent: &str, value: Value) -> Result<GroundAtom, HarnessError> {
    g.atom(fluent, &[], &value)
        .ok_or_else(|| GroundingError::UnknownAtom(format!("{} = {}", fluent, value)).into())
}

/// Taxi with the seed's initial configuration; the goal is the passenger
/// at its destination.
pub fn taxi_setup(kind: DomainKind, g: &Arc<GroundDomain>, seed: u64) -> Result<Setup<Taxi>, HarnessError> {
    let scenario = if kind == DomainKind::Taxi2 { Scenario::Two } else { Scenario::One };
    let env = Taxi::new(scenario, TaxiMap::standard(), g, seed)?;
    let dest = env.map().depots[env.initial().dest as usize].1.clone();
    let goal = vec![goal_atom(g, "passengerat", Value::Sym(dest))?];
    Ok(Setup {
        g: g.clone(),
        env,
        catalog: Taxi::catalog(),
        goal,
    })
}

pub fn gridworld_setup(g: &Arc<GroundDomain>, seed: u64) -> Result<Setup<GridWorld>, HarnessError> {
    let env = GridWorld::new(GridMap::standard(), g, seed)?;
    let (row, col) = env.map().goal;
    let goal = vec![goal_atom(g, "pos", Value::Tuple(vec![Value::Int(row as i64), Value::Int(col as i64)]))?];
    Ok(Setup {
        g: g.clone(),
        env,
        catalog: GridWorld::catalog(),
        goal,
    })
}

/// The agent's generator: same seed as the environment, separate stream.
pub fn agent_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn loop_config(cfg: &ExperimentConfig) -> LoopConfig {
    LoopConfig {
        epsilon_plan: cfg.epsilon_plan,
        max_episodes: cfg.episodes,
        learning: LearningConfig {
            alpha: cfg.alpha,
            beta: cfg.beta,
            epsilon_intra: cfg.epsilon_action,
            step_cap: cfg.step_cap,
        },
        planner: planner_config(cfg),
        ..LoopConfig::default()
    }
}

pub fn planner_config(cfg: &ExperimentConfig) -> PlannerConfig {
    PlannerConfig {
        max_horizon: cfg.max_horizon,
        node_cap: cfg.node_cap,
        ..PlannerConfig::default()
    }
}

pub fn q_config(cfg: &ExperimentConfig) -> QConfig {
    QConfig {
        alpha: cfg.alpha,
        gamma: cfg.gamma,
        epsilon: cfg.epsilon_action,
        episode_cap: cfg.episode_cap,
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub seed: u64,
    pub episode: usize,
    pub cum_reward: f64,
    pub plan_len: usize,
    pub failures: usize,
    pub quality: Option<f64>,
    pub ms: u64,
}

#[derive(Debug)]
pub enum TrainedAgent {
    Peorl(PeorlAgent),
    Q(QAgent),
    Planner(PlanningAgent),
    Hrl(HrlAgent),
}

impl TrainedAgent {
    /// The PEORL agent's final plan, or the planning agent's first plan.
    pub fn final_plan(&self) -> Option<&Plan> {
        match self {
            TrainedAgent::Peorl(a) => a.final_plan(),
            TrainedAgent::Planner(a) => a.plans().first(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AnyEnv {
    Taxi(Taxi),
    GridWorld(GridWorld),
}

#[derive(Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub rows: Vec<Row>,
    pub agent: TrainedAgent,
    pub env: AnyEnv,
}

impl SeedRun {
    /// Gain and value tables of a PEORL run, in snapshot form.
    pub fn snapshot(&self, g: &GroundDomain) -> Option<String> {
        match &self.agent {
            TrainedAgent::Peorl(a) => Some(export_snapshot(g, &a.tables)),
            _ => None,
        }
    }
}

struct Clock {
    on: bool,
    start: Instant,
}

impl Clock {
    fn start(on: bool) -> Self {
        Clock { on, start: Instant::now() }
    }

    fn ms(&self) -> u64 {
        if self.on {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        }
    }
}

fn row(seed: u64, episode: usize, ep: Episode, ms: u64) -> Row {
    Row {
        seed,
        episode,
        cum_reward: ep.reward,
        plan_len: ep.plan_len,
        failures: ep.failures,
        quality: ep.quality,
        ms,
    }
}

pub fn run_seed(cfg: &ExperimentConfig, g: &Arc<GroundDomain>, seed: u64) -> Result<SeedRun, HarnessError> {
    cfg.validate()?;
    if cfg.domain.is_taxi() {
        let setup = taxi_setup(cfg.domain, g, seed)?;
        if cfg.agent == AgentKind::Hrl {
            return run_hrl(cfg, setup, seed);
        }
        let (rows, agent, env) = run_generic(cfg, setup, seed)?;
        Ok(SeedRun {
            seed,
            rows,
            agent,
            env: AnyEnv::Taxi(env),
        })
    } else {
        let (rows, agent, env) = run_generic(cfg, gridworld_setup(g, seed)?, seed)?;
        Ok(SeedRun {
            seed,
            rows,
            agent,
            env: AnyEnv::GridWorld(env),
        })
    }
}

fn run_generic<E: Environment>(
    cfg: &ExperimentConfig,
    setup: Setup<E>,
    seed: u64,
) -> Result<(Vec<Row>, TrainedAgent, E), HarnessError> {
    let Setup { g, mut env, catalog, goal } = setup;
    let mut rng = agent_rng(seed);
    let mut rows = Vec::with_capacity(cfg.episodes);
    let agent = match cfg.agent {
        AgentKind::Peorl => {
            let mut agent = PeorlAgent::new(g, catalog, goal, loop_config(cfg));
            for i in 0..cfg.episodes {
                let clock = Clock::start(cfg.timing);
                let rec = agent.run_episode(&mut env, &mut rng)?;
                let ep = Episode {
                    reward: rec.cum_reward,
                    plan_len: rec.plan_len,
                    failures: rec.failures,
                    quality: rec.quality,
                };
                rows.push(row(seed, i, ep, clock.ms()));
            }
            TrainedAgent::Peorl(agent)
        }
        AgentKind::Q => {
            let mut agent = QAgent::new(env.state_count(), env.action_count(), q_config(cfg));
            for i in 0..cfg.episodes {
                let clock = Clock::start(cfg.timing);
                let ep = agent.run_episode(&mut env, &mut rng)?;
                rows.push(row(seed, i, ep, clock.ms()));
            }
            TrainedAgent::Q(agent)
        }
        AgentKind::Planner => {
            let mut agent = PlanningAgent::new(g, catalog, goal, planner_config(cfg), cfg.step_cap, cfg.replan_cap);
            for i in 0..cfg.episodes {
                let clock = Clock::start(cfg.timing);
                let ep = agent.run_episode(&mut env, &mut rng)?;
                rows.push(row(seed, i, ep, clock.ms()));
            }
            TrainedAgent::Planner(agent)
        }
        AgentKind::Hrl => {
            return Err(ConfigError::Invalid("the hrl agent supports the taxi domains only".into()).into());
        }
    };
    Ok((rows, agent, env))
}

fn run_hrl(cfg: &ExperimentConfig, setup: Setup<Taxi>, seed: u64) -> Result<SeedRun, HarnessError> {
    let mut env = setup.env;
    let mut rng = agent_rng(seed);
    let mut agent = HrlAgent::new(&env, q_config(cfg), cfg.step_cap);
    let mut rows = Vec::with_capacity(cfg.episodes);
    for i in 0..cfg.episodes {
        let clock = Clock::start(cfg.timing);
        let ep = agent.run_episode(&mut env, &mut rng)?;
        rows.push(row(seed, i, ep, clock.ms()));
    }
    Ok(SeedRun {
        seed,
        rows,
        agent: TrainedAgent::Hrl(agent),
        env: AnyEnv::Taxi(env),
    })
}

/// Runs every seed (in parallel) and returns the runs in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>, HarnessError> {
    cfg.validate()?;
    let g = ground_domain(cfg.domain)?;
    cfg.seeds.par_iter().map(|&seed| run_seed(cfg, &g, seed)).collect()
}

pub const CSV_HEADER: &str = "seed,episode,cum_reward,plan_len,failures,quality,ms";

pub fn write_csv<W: Write>(w: &mut W, runs: &[SeedRun]) -> io::Result<()> {
    writeln!(w, "{}", CSV_HEADER)?;
    for r in runs.iter().flat_map(|run| &run.rows) {
        let quality = r.quality.map(|q| q.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.seed, r.episode, r.cum_reward, r.plan_len, r.failures, quality, r.ms
        )?;
    }
    Ok(())
}

/// Mean of `f` over rows `range` of a run.
pub fn window_mean(rows: &[Row], range: std::ops::Range<usize>, f: impl Fn(&Row) -> f64) -> f64 {
    let slice = &rows[range];
    slice.iter().map(f).sum::<f64>() / slice.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_one_row_per_episode() {
        let mut cfg = ExperimentConfig::new(AgentKind::Q, DomainKind::Taxi1);
        cfg.episodes = 3;
        cfg.seeds = vec![4, 5];
        let runs = run_experiment(&cfg).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &runs).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("4,0,"));
        assert!(lines[6].starts_with("5,2,"));
        let fields: Vec<&str> = lines[1].split(',').collect();
        // no plan, no quality, timing off
        assert_eq!((fields[3], fields[5], fields[6]), ("0", "", "0"));
    }

    #[test]
    fn agent_stream_differs_from_env_stream() {
        use rand::RngCore;
        let mut a = agent_rng(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn hrl_rejects_gridworld() {
        let cfg = ExperimentConfig::new(AgentKind::Hrl, DomainKind::GridWorld);
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn planner_agent_plan_is_shortest_on_taxi() {
        let g = ground_domain(DomainKind::Taxi1).unwrap();
        let mut s = taxi_setup(DomainKind::Taxi1, &g, 0).unwrap();
        let mut agent = PlanningAgent::new(g.clone(), s.catalog.clone(), s.goal.clone(), PlannerConfig::default(), 100, 5);
        let ep = agent.run_episode(&mut s.env, &mut agent_rng(0)).unwrap();
        // every Taxi transition is one primitive step
        assert_eq!(ep.reward, 20.0 - (ep.plan_len as f64 - 1.0));
        assert_eq!(ep.failures, 0);
    }
}
