pub mod action_language;
pub mod envs;
pub mod grounding;
pub mod harness;
pub mod hrl;
pub mod peorl_loop;
pub mod planner;
