use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use peorl::action_language::parse_action_description;
use peorl::envs::Environment;
use peorl::grounding::{ground, GroundDomain};
use peorl::harness::{
    self, agent_rng, gridworld_setup, loop_config, parse_config_text, taxi_setup, ConfigError, DomainKind,
    ExperimentConfig, HarnessError, Setup,
};
use peorl::hrl::{import_snapshot, LearningTables};
use peorl::peorl_loop::PeorlAgent;
use peorl::planner::{format_plan, GoalSpec, Planner, PlannerConfig, QualityBound, RhoFacts, SearchMode};

#[derive(Parser)]
#[command(name = "peorl", version, about = "Plan-guided hierarchical R-learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan once over an action description.
    Plan(PlanArgs),
    /// Train an agent over several seeds and log one CSV row per episode.
    Train(TrainArgs),
    /// Plan with saved gain rewards and execute the plan.
    Eval(EvalArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Action description file, or a bundled domain name.
    #[arg(long)]
    domain: String,
    /// Initial state, `fluent = value` atoms separated by commas.
    #[arg(long)]
    init: String,
    #[arg(long)]
    goal: String,
    /// Require plan quality of at least this value.
    #[arg(long)]
    quality_min: Option<f64>,
    #[arg(long, default_value_t = 30)]
    horizon: usize,
    /// Snapshot whose RHO lines are used as gain-reward facts.
    #[arg(long)]
    facts: Option<PathBuf>,
    /// Best quality over all horizons instead of the shortest horizon.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    /// `0,1,2` or `0..10`.
    #[arg(long)]
    seeds: Option<String>,
    /// A constant or `initial:end:horizon`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "epsilon_plan", alias = "epsilon-plan")]
    epsilon_plan: Option<String>,
    #[arg(long = "epsilon_action", alias = "epsilon-action")]
    epsilon_action: Option<String>,
    #[arg(long = "step_cap", alias = "step-cap")]
    step_cap: Option<String>,
    #[arg(long = "episode_cap", alias = "episode-cap")]
    episode_cap: Option<String>,
    #[arg(long = "max_horizon", alias = "max-horizon")]
    max_horizon: Option<String>,
    #[arg(long = "node_cap", alias = "node-cap")]
    node_cap: Option<String>,
    #[arg(long = "replan_cap", alias = "replan-cap")]
    replan_cap: Option<String>,
    #[arg(long)]
    timing: Option<String>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Write `<prefix><seed>.tables` for every PEORL seed.
    #[arg(long = "save-tables")]
    save_tables: Option<String>,
}

impl TrainArgs {
    fn pairs(&self) -> Vec<(String, String)> {
        let flags = [
            ("agent", &self.agent),
            ("domain", &self.domain),
            ("episodes", &self.episodes),
            ("seeds", &self.seeds),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("epsilon_plan", &self.epsilon_plan),
            ("epsilon_action", &self.epsilon_action),
            ("step_cap", &self.step_cap),
            ("episode_cap", &self.episode_cap),
            ("max_horizon", &self.max_horizon),
            ("node_cap", &self.node_cap),
            ("replan_cap", &self.replan_cap),
            ("timing", &self.timing),
            ("out", &self.out),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Snapshot written by `train --save-tables`.
    #[arg(long)]
    tables: PathBuf,
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Greedy execution; otherwise ε-greedy with `--epsilon`.
    #[arg(long)]
    greedy: bool,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
}

/// Failure split by exit code: usage errors are 1, everything else 2.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Failure::Usage(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {}", path.display(), e)))
}

fn load_domain(name: &str) -> Result<Arc<GroundDomain>, Failure> {
    if let Ok(kind) = name.parse::<DomainKind>() {
        return Ok(harness::ground_domain(kind)?);
    }
    let src = read(Path::new(name))?;
    let desc = parse_action_description(&src).map_err(|ds| {
        Failure::Runtime(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
    })?;
    Ok(Arc::new(ground(&desc).map_err(runtime)?))
}

fn facts_from(tables: &LearningTables, inf_value: f64) -> RhoFacts {
    let mut facts = RhoFacts::new(inf_value);
    for ((s, a), v) in &tables.option_rho {
        facts.set(s.clone(), *a, *v);
    }
    facts
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let g = load_domain(&a.domain)?;
    let init = g.parse_ground_atoms(&a.init).map_err(|e| Failure::Usage(e.to_string()))?;
    let init = g.initial_state(&init).map_err(runtime)?;
    let goal = g.parse_ground_atoms(&a.goal).map_err(|e| Failure::Usage(e.to_string()))?;
    let facts = match &a.facts {
        Some(p) => facts_from(&import_snapshot(&g, &read(p)?).map_err(runtime)?, RhoFacts::default().inf_value),
        None => RhoFacts::default(),
    };
    let bound = a.quality_min.map_or(QualityBound::Unbounded, QualityBound::AtLeast);
    let cfg = PlannerConfig {
        max_horizon: a.horizon,
        mode: if a.exhaustive { SearchMode::Exhaustive } else { SearchMode::Deepening },
        ..PlannerConfig::default()
    };
    let out = Planner::new(cfg)
        .plan(&g, &init, &GoalSpec::new(goal).with_bound(bound), &facts)
        .map_err(runtime)?;
    match out.plan {
        Some(p) => print!("{}", format_plan(&g, &p)),
        None if out.truncated => println!("no plan found (search truncated)"),
        None => println!("no plan"),
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), Failure> {
    let mut pairs = match &a.config {
        Some(p) => parse_config_text(&read(p)?)?,
        None => Vec::new(),
    };
    pairs.extend(a.pairs());
    let cfg = ExperimentConfig::from_pairs(&pairs)?;
    let runs = harness::run_experiment(&cfg)?;
    match &cfg.out {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).map_err(runtime)?);
            harness::write_csv(&mut f, &runs).map_err(runtime)?;
            f.flush().map_err(runtime)?;
        }
        None => harness::write_csv(&mut io::stdout().lock(), &runs).map_err(runtime)?,
    }
    if let Some(prefix) = &a.save_tables {
        let g = harness::ground_domain(cfg.domain)?;
        for run in &runs {
            if let Some(text) = run.snapshot(&g) {
                fs::write(format!("{}{}.tables", prefix, run.seed), text).map_err(runtime)?;
            }
        }
    }
    Ok(())
}

fn evaluate<E: Environment>(setup: Setup<E>, tables: LearningTables, a: &EvalArgs) -> Result<(), Failure> {
    let cfg = ExperimentConfig::new(harness::AgentKind::Peorl, a.domain.parse()?);
    let mut lc = loop_config(&cfg);
    lc.planner.mode = SearchMode::Exhaustive;
    // pairs never tried during training are strongly discouraged
    let facts = facts_from(&tables, -1e6);
    let Setup { g, mut env, catalog, goal } = setup;
    let s0 = env.reset();
    let init = env.abstract_state(&s0);
    let out = Planner::new(lc.planner)
        .plan(&g, &init, &GoalSpec::new(goal.clone()), &facts)
        .map_err(runtime)?;
    let Some(plan) = out.plan else {
        return Err(Failure::Runtime("no plan from the saved tables".into()));
    };
    print!("{}", format_plan(&g, &plan));
    let mut agent = PeorlAgent::new(g, catalog, goal, lc);
    agent.tables = tables;
    let epsilon = if a.greedy { 0.0 } else { a.epsilon };
    let mut rng = agent_rng(a.seed);
    let mut total = 0.0;
    for i in 0..a.episodes {
        let rec = agent.evaluate(&plan, &mut env, epsilon, &mut rng).map_err(runtime)?;
        println!("episode {} reward {} failures {}", i, rec.cum_reward, rec.failures);
        total += rec.cum_reward;
    }
    println!("mean reward {}", total / a.episodes.max(1) as f64);
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let kind: DomainKind = a.domain.parse()?;
    let g = harness::ground_domain(kind)?;
    let tables = import_snapshot(&g, &read(&a.tables)?).map_err(runtime)?;
    if kind.is_taxi() {
        evaluate(taxi_setup(kind, &g, a.seed)?, tables, &a)
    } else {
        evaluate(gridworld_setup(&g, a.seed)?, tables, &a)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(2)
        }
    }
}
