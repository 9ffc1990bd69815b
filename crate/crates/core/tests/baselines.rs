mod common;

use std::process::Command;

use peorl::envs::Environment;
use peorl::harness::{agent_rng, run_experiment, window_mean, AgentKind, AnyEnv, DomainKind, ExperimentConfig, SeedRun, TrainedAgent};

use common::taxi_shortest;

fn runs(agent: AgentKind, domain: DomainKind, seeds: Vec<u64>) -> Vec<SeedRun> {
    let cfg = ExperimentConfig {
        seeds,
        ..ExperimentConfig::new(agent, domain)
    };
    run_experiment(&cfg).unwrap()
}

fn last_100(run: &SeedRun) -> f64 {
    let n = run.rows.len();
    window_mean(&run.rows, n - 100..n, |r| r.cum_reward)
}

#[test]
fn flat_q_learns_shortest_taxi_routes() {
    for run in runs(AgentKind::Q, DomainKind::Taxi1, vec![0, 1, 2]) {
        let (TrainedAgent::Q(agent), AnyEnv::Taxi(mut env)) = (run.agent, run.env) else {
            unreachable!()
        };
        let shortest = taxi_shortest(env.map(), &env.initial()) as f64;
        let ep = agent.rollout(&mut env).unwrap();
        assert_eq!(ep.reward, 21.0 - shortest, "seed {}", run.seed);
        assert_eq!(ep.failures, 0);
    }
}

#[test]
fn hrl_learns_shortest_taxi_routes() {
    for run in runs(AgentKind::Hrl, DomainKind::Taxi1, vec![0, 1, 2]) {
        let AnyEnv::Taxi(env) = &run.env else { unreachable!() };
        let shortest = taxi_shortest(env.map(), &env.initial()) as f64;
        // exploration has annealed to zero by the last episode
        assert_eq!(run.rows.last().unwrap().cum_reward, 21.0 - shortest, "seed {}", run.seed);
    }
}

#[test]
fn flat_q_opens_the_door() {
    for run in runs(AgentKind::Q, DomainKind::GridWorld, vec![0, 1]) {
        let (TrainedAgent::Q(mut agent), AnyEnv::GridWorld(mut env)) = (run.agent, run.env) else {
            unreachable!()
        };
        // a frozen greedy policy can cycle; the learning agent's next
        // (exploration-free) episode gets through
        agent.run_episode(&mut env, &mut agent_rng(run.seed)).unwrap();
        assert!(env.is_done(), "seed {}", run.seed);
        assert!(env.state().open);
    }
}

#[test]
fn planning_agent_does_not_improve_on_taxi() {
    for run in runs(AgentKind::Planner, DomainKind::Taxi1, vec![0, 1, 2]) {
        let first = run.rows[0].cum_reward;
        assert!(run.rows.iter().all(|r| r.cum_reward == first), "seed {}", run.seed);
    }
}

#[test]
fn hrl_misses_the_bonus_that_peorl_finds() {
    let seeds: Vec<u64> = (0..5).collect();
    let hrl = runs(AgentKind::Hrl, DomainKind::Taxi2, seeds.clone());
    let peorl = runs(AgentKind::Peorl, DomainKind::Taxi2, seeds);
    let mean = |rs: &[SeedRun]| rs.iter().map(last_100).sum::<f64>() / rs.len() as f64;
    let (h, p) = (mean(&hrl), mean(&peorl));
    assert!(h < p, "hrl {} peorl {}", h, p);
}

#[test]
fn train_writes_one_row_per_episode_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("taxi1.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_peorl"))
        .args(["train", "--agent", "peorl", "--domain", "taxi1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 20_001);
    assert_eq!(text.lines().next().unwrap(), "seed,episode,cum_reward,plan_len,failures,quality,ms");
}
