use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::hrl::{Schedule, DEFAULT_STEP_CAP};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Taxi1,
    Taxi2,
    GridWorld,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Taxi1 => "taxi1",
            DomainKind::Taxi2 => "taxi2",
            DomainKind::GridWorld => "gridworld",
        }
    }

    /// Bundled action description.
    pub fn source(self) -> &'static str {
        match self {
            DomainKind::Taxi1 => include_str!("../../data/taxi1.bc"),
            DomainKind::Taxi2 => include_str!("../../data/taxi2.bc"),
            DomainKind::GridWorld => include_str!("../../data/gridworld.bc"),
        }
    }

    pub fn is_taxi(self) -> bool {
        self != DomainKind::GridWorld
    }
}

impl FromStr for DomainKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "taxi1" => Ok(DomainKind::Taxi1),
            "taxi2" => Ok(DomainKind::Taxi2),
            "gridworld" => Ok(DomainKind::GridWorld),
            _ => Err(bad("domain", s)),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Peorl,
    /// Flat tabular Q-learning.
    Q,
    /// Shortest plans, random option execution, no learning.
    Planner,
    /// SMDP Q-learning over hand-written Taxi options.
    Hrl,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Peorl => "peorl",
            AgentKind::Q => "q",
            AgentKind::Planner => "planner",
            AgentKind::Hrl => "hrl",
        }
    }
}

impl FromStr for AgentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "peorl" => Ok(AgentKind::Peorl),
            "q" => Ok(AgentKind::Q),
            "planner" => Ok(AgentKind::Planner),
            "hrl" => Ok(AgentKind::Hrl),
            _ => Err(bad("agent", s)),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    pub domain: DomainKind,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    /// Learning rate for R (PEORL) and Q values (baselines).
    pub alpha: Schedule,
    /// Learning rate for the gain reward.
    pub beta: f64,
    /// Discount of the Q-learning baselines.
    pub gamma: f64,
    pub epsilon_plan: f64,
    /// Exploration of primitive actions, inside options or flat.
    pub epsilon_action: Schedule,
    /// Primitive steps before an option gives up.
    pub step_cap: usize,
    /// Primitive steps before a baseline episode is cut off.
    pub episode_cap: usize,
    pub max_horizon: usize,
    pub node_cap: usize,
    /// Replans allowed per planning-agent episode.
    pub replan_cap: usize,
    /// Fill the `ms` column; off by default so logs are reproducible.
    pub timing: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(agent: AgentKind, domain: DomainKind) -> Self {
        let taxi = domain.is_taxi();
        ExperimentConfig {
            agent,
            domain,
            episodes: if taxi { 2000 } else { 1000 },
            seeds: (0..10).collect(),
            alpha: Schedule {
                initial: 1.0,
                end: 0.01,
                horizon: 500,
            },
            beta: 0.5,
            gamma: 0.99,
            epsilon_plan: 0.2,
            epsilon_action: Schedule {
                initial: 0.1,
                end: 0.0,
                horizon: 500,
            },
            step_cap: DEFAULT_STEP_CAP,
            episode_cap: if taxi { 200 } else { 2000 },
            max_horizon: 30,
            node_cap: 5_000_000,
            replan_cap: 50,
            timing: false,
            out: None,
        }
    }

    /// Builds a config from `key = value` pairs applied in order on top of
    /// the defaults for the pairs' final `agent` and `domain`.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut agent = AgentKind::Peorl;
        let mut domain = DomainKind::Taxi1;
        for (k, v) in pairs {
            match k.as_str() {
                "agent" => agent = v.parse()?,
                "domain" => domain = v.parse()?,
                _ => {}
            }
        }
        let mut cfg = ExperimentConfig::new(agent, domain);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "agent" => self.agent = v.parse()?,
            "domain" => self.domain = v.parse()?,
            "episodes" => self.episodes = num(key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "alpha" => self.alpha = parse_schedule(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "epsilon_plan" => self.epsilon_plan = num(key, v)?,
            "epsilon_action" => self.epsilon_action = parse_schedule(key, v)?,
            "step_cap" => self.step_cap = num(key, v)?,
            "episode_cap" => self.episode_cap = num(key, v)?,
            "max_horizon" => self.max_horizon = num(key, v)?,
            "node_cap" => self.node_cap = num(key, v)?,
            "replan_cap" => self.replan_cap = num(key, v)?,
            "timing" => self.timing = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.episodes == 0 {
            return Err(ConfigError::Invalid("episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("at least one seed is required".into()));
        }
        if self.max_horizon == 0 {
            return Err(ConfigError::Invalid("max_horizon must be at least 1".into()));
        }
        if self.agent == AgentKind::Hrl && !self.domain.is_taxi() {
            return Err(ConfigError::Invalid("the hrl agent supports the taxi domains only".into()));
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| bad(key, v))
}

/// `0,1,2` or a range `0..10`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>, ConfigError> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (num("seeds", a.trim())?, num("seeds", b.trim())?);
        return Ok((a..b).collect());
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num("seeds", s.trim()))
        .collect()
}

/// A constant `v`, or `initial:end:horizon`.
pub fn parse_schedule(key: &str, v: &str) -> Result<Schedule, ConfigError> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts[..] {
        [c] => Ok(Schedule::constant(num(key, c)?)),
        [a, b, h] => Ok(Schedule {
            initial: num(key, a)?,
            end: num(key, b)?,
            horizon: num(key, h)?,
        }),
        _ => Err(bad(key, v)),
    }
}

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_config_text(text).unwrap()
    }

    #[test]
    fn later_pairs_override_earlier() {
        let cfg = ExperimentConfig::from_pairs(&pairs("episodes = 5\nseeds = 1,2\n# note\nepisodes = 7")).unwrap();
        assert_eq!(cfg.episodes, 7);
        assert_eq!(cfg.seeds, vec![1, 2]);
    }

    #[test]
    fn domain_defaults_follow_final_domain() {
        let cfg = ExperimentConfig::from_pairs(&pairs("domain = gridworld")).unwrap();
        assert_eq!(cfg.episodes, 1000);
        assert_eq!(cfg.episode_cap, 2000);
    }

    #[test]
    fn schedules_and_ranges() {
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        let s = parse_schedule("alpha", "1:0.01:500").unwrap();
        assert_eq!((s.initial, s.end, s.horizon), (1.0, 0.01, 500));
        assert_eq!(parse_schedule("beta", "0.5").unwrap(), Schedule::constant(0.5));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_config_text("episodes 5"), Err(ConfigError::Syntax { line: 1 }));
        assert_eq!(
            ExperimentConfig::from_pairs(&pairs("colour = red")),
            Err(ConfigError::UnknownKey("colour".into()))
        );
        assert!(ExperimentConfig::from_pairs(&pairs("episodes = 0")).is_err());
        assert!(ExperimentConfig::from_pairs(&pairs("agent = hrl\ndomain = gridworld")).is_err());
    }
}
