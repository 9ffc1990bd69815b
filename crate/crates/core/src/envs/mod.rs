//! Benchmark environments (Taxi, GridWorld) and their abstraction into
//! symbolic states of the matching action description.

mod gridworld;
mod maps;
mod taxi;

use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::grounding::{GroundingError, SymbolicState};

pub use gridworld::{GridState, GridWorld, GRAB_BASE, PUSH_BASE, ROTATE_CCW, ROTATE_CW};
pub use maps::{parse_grid_map, parse_taxi_map, Dir, GridMap, TaxiMap};
pub use taxi::{Scenario, Taxi, TaxiState, DROPOFF, PICKUP};

/// Primitive environment action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvAction(pub u16);

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub next: S,
    pub reward: f64,
    pub done: bool,
    /// The primitive action failed; the state is unchanged.
    pub failed: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("step called after the episode ended")]
    Finished,
    #[error("action {0} out of range")]
    InvalidAction(u16),
    #[error("map line {line}: {msg}")]
    Map { line: usize, msg: String },
    #[error("environment does not match its domain: {0}")]
    Abstraction(#[from] GroundingError),
}

/// A tabular episodic environment whose states abstract to symbolic states.
pub trait Environment {
    type State: Clone + Eq + Hash + Debug;

    /// Restores this instance's initial configuration.
    fn reset(&mut self) -> Self::State;
    fn state(&self) -> &Self::State;
    fn is_done(&self) -> bool;
    fn step(&mut self, a: EnvAction) -> Result<StepResult<Self::State>, EnvError>;

    fn action_count(&self) -> usize;
    fn action_name(&self, a: EnvAction) -> String;
    /// Dense index in `0..state_count()`.
    fn state_index(&self, s: &Self::State) -> usize;
    fn state_count(&self) -> usize;

    fn abstract_state(&self, s: &Self::State) -> SymbolicState;
}
