use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::maps::{Dir, TaxiMap};
use super::{EnvAction, EnvError, Environment, StepResult};
use crate::action_language::Value;
use crate::grounding::{GroundDomain, SymbolicState};
use crate::hrl::ActionCatalog;

pub const PICKUP: EnvAction = EnvAction(4);
pub const DROPOFF: EnvAction = EnvAction(5);

const MOVES: [Dir; 4] = [Dir::S, Dir::N, Dir::E, Dir::W];
const NAMES: [&str; 6] = ["south", "north", "east", "west", "pickup", "dropoff"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Plain Taxi.
    One,
    /// Delivering after visiting the bonus cell pays an extra 30.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaxiState {
    pub row: u8,
    pub col: u8,
    /// Depot index, or `depots.len()` while in the taxi.
    pub passenger: u8,
    pub dest: u8,
    pub visited: bool,
}

#[derive(Debug, Clone)]
pub struct Taxi {
    map: TaxiMap,
    scenario: Scenario,
    initial: TaxiState,
    state: TaxiState,
    done: bool,
    abstractions: Vec<SymbolicState>,
}

impl Taxi {
    /// Draws the episode's initial configuration from `seed`: taxi on a
    /// uniformly random cell, passenger and destination on distinct depots.
    pub fn new(scenario: Scenario, map: TaxiMap, g: &GroundDomain, seed: u64) -> Result<Taxi, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial = Taxi::random_initial(&map, &mut rng);
        Taxi::with_initial(scenario, map, g, initial)
    }

    pub fn random_initial<R: Rng>(map: &TaxiMap, rng: &mut R) -> TaxiState {
        let n = map.depots.len() as u8;
        let row = rng.gen_range(1..=map.rows);
        let col = rng.gen_range(1..=map.cols);
        let passenger = rng.gen_range(0..n);
        let mut dest = rng.gen_range(0..n - 1);
        if dest >= passenger {
            dest += 1;
        }
        TaxiState {
            row,
            col,
            passenger,
            dest,
            visited: false,
        }
    }

    pub fn with_initial(
        scenario: Scenario,
        map: TaxiMap,
        g: &GroundDomain,
        initial: TaxiState,
    ) -> Result<Taxi, EnvError> {
        let mut t = Taxi {
            map,
            scenario,
            initial,
            state: initial,
            done: false,
            abstractions: Vec::new(),
        };
        t.abstractions = t.all_states().map(|s| t.abstract_via(g, &s)).collect::<Result<_, _>>()?;
        Ok(t)
    }

    pub fn map(&self) -> &TaxiMap {
        &self.map
    }

    pub fn initial(&self) -> TaxiState {
        self.initial
    }

    /// Every state, in `state_index` order.
    pub fn all_states(&self) -> impl Iterator<Item = TaxiState> {
        let (rows, cols, n) = (self.map.rows, self.map.cols, self.map.depots.len() as u8);
        (1..=rows).flat_map(move |row| {
            (1..=cols).flat_map(move |col| {
                (0..=n).flat_map(move |passenger| {
                    (0..n).flat_map(move |dest| {
                        [false, true].into_iter().map(move |visited| TaxiState {
                            row,
                            col,
                            passenger,
                            dest,
                            visited,
                        })
                    })
                })
            })
        })
    }

    fn abstract_via(&self, g: &GroundDomain, s: &TaxiState) -> Result<SymbolicState, EnvError> {
        let n = self.map.depots.len() as u8;
        let depot = |i: u8| Value::Sym(self.map.depots[i as usize].1.clone());
        let place = if s.passenger == n {
            Value::Sym("intaxi".into())
        } else {
            depot(s.passenger)
        };
        let mut atoms = vec![
            ("taxiat", Value::Tuple(vec![Value::Int(s.row as i64), Value::Int(s.col as i64)])),
            ("passengerat", place),
            ("dest", depot(s.dest)),
        ];
        if g.fluent_id("rewardvisited", &[]).is_some() {
            atoms.push(("rewardvisited", Value::Bool(s.visited)));
        }
        let ground = atoms
            .iter()
            .map(|(f, v)| {
                g.atom(f, &[], v).ok_or_else(|| {
                    crate::grounding::GroundingError::UnknownAtom(format!("{} = {}", f, v))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(g.initial_state(&ground)?)
    }

    /// `move(d)`, `pickup` and `dropoff` each map to one primitive action.
    pub fn catalog() -> ActionCatalog {
        let mut c = ActionCatalog::new();
        for (i, d) in MOVES.iter().enumerate() {
            c.insert(format!("move({})", d.name()), vec![EnvAction(i as u16)]);
        }
        c.insert("pickup", vec![PICKUP]);
        c.insert("dropoff", vec![DROPOFF]);
        c
    }
}

impl Environment for Taxi {
    type State = TaxiState;

    fn reset(&mut self) -> TaxiState {
        self.state = self.initial;
        self.done = false;
        self.state
    }

    fn state(&self) -> &TaxiState {
        &self.state
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn step(&mut self, a: EnvAction) -> Result<StepResult<TaxiState>, EnvError> {
        if self.done {
            return Err(EnvError::Finished);
        }
        let n = self.map.depots.len() as u8;
        let s = &mut self.state;
        let here = (s.row, s.col);
        let (reward, failed) = match a.0 {
            0..=3 => {
                if let Some((r, c)) = self.map.step(here, MOVES[a.0 as usize]) {
                    s.row = r;
                    s.col = c;
                    if self.scenario == Scenario::Two && self.map.bonus == Some((r, c)) {
                        s.visited = true;
                    }
                }
                (-1.0, false)
            }
            4 => {
                if s.passenger < n && self.map.depots[s.passenger as usize].0 == here {
                    s.passenger = n;
                    (-1.0, false)
                } else {
                    (-10.0, true)
                }
            }
            5 => {
                if s.passenger == n && self.map.depots[s.dest as usize].0 == here {
                    s.passenger = s.dest;
                    self.done = true;
                    let bonus = self.scenario == Scenario::Two && s.visited;
                    (if bonus { 50.0 } else { 20.0 }, false)
                } else {
                    (-10.0, true)
                }
            }
            other => return Err(EnvError::InvalidAction(other)),
        };
        Ok(StepResult {
            next: self.state,
            reward,
            done: self.done,
            failed,
        })
    }

    fn action_count(&self) -> usize {
        NAMES.len()
    }

    fn action_name(&self, a: EnvAction) -> String {
        NAMES.get(a.0 as usize).unwrap_or(&"?").to_string()
    }

    fn state_index(&self, s: &TaxiState) -> usize {
        let n = self.map.depots.len();
        let cell = (s.row as usize - 1) * self.map.cols as usize + (s.col as usize - 1);
        ((cell * (n + 1) + s.passenger as usize) * n + s.dest as usize) * 2 + s.visited as usize
    }

    fn state_count(&self) -> usize {
        let n = self.map.depots.len();
        self.map.rows as usize * self.map.cols as usize * (n + 1) * n * 2
    }

    fn abstract_state(&self, s: &TaxiState) -> SymbolicState {
        self.abstractions[self.state_index(s)].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_language::parse_action_description;
    use crate::grounding::ground;

    fn domain(two: bool) -> GroundDomain {
        let src = if two {
            include_str!("../../data/taxi2.bc")
        } else {
            include_str!("../../data/taxi1.bc")
        };
        ground(&parse_action_description(src).unwrap()).unwrap()
    }

    fn at(row: u8, col: u8, passenger: u8, dest: u8) -> TaxiState {
        TaxiState {
            row,
            col,
            passenger,
            dest,
            visited: false,
        }
    }

    #[test]
    fn indices_are_dense() {
        let t = Taxi::new(Scenario::Two, TaxiMap::standard(), &domain(true), 0).unwrap();
        let idx: Vec<usize> = t.all_states().map(|s| t.state_index(&s)).collect();
        assert_eq!(idx, (0..t.state_count()).collect::<Vec<_>>());
    }

    #[test]
    fn wall_move_costs_a_step() {
        let g = domain(false);
        let mut t = Taxi::with_initial(Scenario::One, TaxiMap::standard(), &g, at(1, 2, 0, 1)).unwrap();
        let r = t.step(EnvAction(2)).unwrap();
        assert_eq!((r.next.row, r.next.col, r.reward, r.failed), (1, 2, -1.0, false));
    }

    #[test]
    fn improper_dropoff_then_delivery() {
        let g = domain(false);
        // passenger at r (1,1), destination g (1,5)
        let mut t = Taxi::with_initial(Scenario::One, TaxiMap::standard(), &g, at(1, 1, 0, 1)).unwrap();
        let r = t.step(DROPOFF).unwrap();
        assert_eq!((r.reward, r.done, r.failed), (-10.0, false, true));
        assert_eq!(t.step(PICKUP).unwrap().reward, -1.0);
        let s = t.abstract_state(t.state());
        assert_eq!(g.format_state(&s), "{taxiat(1,1),passengerat=intaxi,dest=g,~atpassenger,~atdest}");
        t.state.col = 5;
        let r = t.step(DROPOFF).unwrap();
        assert_eq!((r.reward, r.done), (20.0, true));
        assert_eq!(t.step(EnvAction(0)), Err(EnvError::Finished));
    }

    #[test]
    fn bonus_after_visit() {
        let g = domain(true);
        let mut t = Taxi::with_initial(Scenario::Two, TaxiMap::standard(), &g, at(4, 5, 4, 3)).unwrap();
        t.step(EnvAction(0)).unwrap();
        assert!(t.state().visited);
        t.step(EnvAction(3)).unwrap();
        let r = t.step(DROPOFF).unwrap();
        assert_eq!(r.reward, 50.0);
    }

    #[test]
    fn same_seed_same_start() {
        let g = domain(false);
        let a = Taxi::new(Scenario::One, TaxiMap::standard(), &g, 7).unwrap();
        let b = Taxi::new(Scenario::One, TaxiMap::standard(), &g, 7).unwrap();
        assert_eq!(a.initial(), b.initial());
    }
}
