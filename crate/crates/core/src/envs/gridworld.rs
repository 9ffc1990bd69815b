use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::maps::{Dir, GridMap};
use super::{EnvAction, EnvError, Environment, StepResult};
use crate::action_language::Value;
use crate::grounding::{GroundDomain, GroundingError, SymbolicState};
use crate::hrl::ActionCatalog;

/// `grab(F)` is `GRAB_BASE + F` for `F` in `0..=MAX_FORCE`.
pub const GRAB_BASE: u16 = 4;
pub const ROTATE_CW: u16 = GRAB_BASE + MAX_FORCE + 1;
pub const ROTATE_CCW: u16 = ROTATE_CW + 1;
/// `push(F)` is `PUSH_BASE + F`.
pub const PUSH_BASE: u16 = ROTATE_CCW + 1;
const MAX_FORCE: u16 = 60;
const ACTIONS: u16 = PUSH_BASE + MAX_FORCE + 1;

const MOVES: [Dir; 4] = [Dir::E, Dir::S, Dir::W, Dir::N];

fn good_force(f: u16) -> bool {
    (20..40).contains(&f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridState {
    pub row: u8,
    pub col: u8,
    pub grabbed: bool,
    pub active: bool,
    pub open: bool,
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    map: GridMap,
    initial: GridState,
    state: GridState,
    done: bool,
    abstractions: Vec<SymbolicState>,
}

impl GridWorld {
    /// Starts on one of the map's start cells, chosen from `seed`.
    pub fn new(map: GridMap, g: &GroundDomain, seed: u64) -> Result<GridWorld, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (row, col) = map.starts[rng.gen_range(0..map.starts.len())];
        GridWorld::with_initial(map, g, GridWorld::fresh(row, col))
    }

    /// Door closed, inactive, knob released.
    pub fn fresh(row: u8, col: u8) -> GridState {
        GridState {
            row,
            col,
            grabbed: false,
            active: false,
            open: false,
        }
    }

    pub fn with_initial(map: GridMap, g: &GroundDomain, initial: GridState) -> Result<GridWorld, EnvError> {
        let mut w = GridWorld {
            map,
            initial,
            state: initial,
            done: false,
            abstractions: Vec::new(),
        };
        // abstraction ignores `grabbed`, so index by the other fields
        let mut abs = Vec::new();
        for row in 1..=w.map.rows {
            for col in 1..=w.map.cols {
                for active in [false, true] {
                    for open in [false, true] {
                        let atoms = [
                            ("pos", Value::Tuple(vec![Value::Int(row as i64), Value::Int(col as i64)])),
                            ("dooractive", Value::Bool(active)),
                            ("dooropen", Value::Bool(open)),
                        ]
                        .iter()
                        .map(|(f, v)| {
                            g.atom(f, &[], v)
                                .ok_or_else(|| GroundingError::UnknownAtom(format!("{} = {}", f, v)))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                        abs.push(g.initial_state(&atoms)?);
                    }
                }
            }
        }
        w.abstractions = abs;
        Ok(w)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn initial(&self) -> GridState {
        self.initial
    }

    /// Moves map one-to-one; `activate` admits every grab force and both
    /// rotations; `push` admits every push force.
    pub fn catalog() -> ActionCatalog {
        let mut c = ActionCatalog::new();
        for (i, d) in MOVES.iter().enumerate() {
            c.insert(format!("move({})", d.name()), vec![EnvAction(i as u16)]);
        }
        let mut activate: Vec<EnvAction> = (0..=MAX_FORCE).map(|f| EnvAction(GRAB_BASE + f)).collect();
        activate.push(EnvAction(ROTATE_CW));
        activate.push(EnvAction(ROTATE_CCW));
        c.insert("activate", activate);
        c.insert("push", (0..=MAX_FORCE).map(|f| EnvAction(PUSH_BASE + f)).collect());
        c
    }
}

impl Environment for GridWorld {
    type State = GridState;

    fn reset(&mut self) -> GridState {
        self.state = self.initial;
        self.done = false;
        self.state
    }

    fn state(&self) -> &GridState {
        &self.state
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn step(&mut self, a: EnvAction) -> Result<StepResult<GridState>, EnvError> {
        if self.done {
            return Err(EnvError::Finished);
        }
        if a.0 >= ACTIONS {
            return Err(EnvError::InvalidAction(a.0));
        }
        let s = &mut self.state;
        let here = (s.row, s.col);
        let at_door = here == self.map.door.0;
        let fail = (-10.0, true);
        let ok = (-1.0, false);
        let (reward, failed) = match a.0 {
            0..=3 => {
                let d = MOVES[a.0 as usize];
                let dest = self.map.step(here, d);
                match dest {
                    Some(to) if !self.map.crosses_door(here, d) || s.open => {
                        s.row = to.0;
                        s.col = to.1;
                        s.grabbed = false;
                        if to == self.map.goal {
                            self.done = true;
                        }
                        (self.map.penalty(to), false)
                    }
                    _ => ok,
                }
            }
            x if x < ROTATE_CW => {
                if at_door && good_force(x - GRAB_BASE) {
                    s.grabbed = true;
                    ok
                } else {
                    fail
                }
            }
            ROTATE_CW => {
                if at_door && s.grabbed {
                    s.active = true;
                    ok
                } else {
                    fail
                }
            }
            ROTATE_CCW => fail,
            x => {
                if at_door && s.active && good_force(x - PUSH_BASE) {
                    s.open = true;
                    ok
                } else {
                    fail
                }
            }
        };
        Ok(StepResult {
            next: self.state,
            reward,
            done: self.done,
            failed,
        })
    }

    fn action_count(&self) -> usize {
        ACTIONS as usize
    }

    fn action_name(&self, a: EnvAction) -> String {
        match a.0 {
            0..=3 => format!("move({})", MOVES[a.0 as usize].name()),
            x if x < ROTATE_CW => format!("grab({})", x - GRAB_BASE),
            ROTATE_CW => "rotate(cw)".into(),
            ROTATE_CCW => "rotate(ccw)".into(),
            x if x < ACTIONS => format!("push({})", x - PUSH_BASE),
            _ => "?".into(),
        }
    }

    fn state_index(&self, s: &GridState) -> usize {
        let cell = (s.row as usize - 1) * self.map.cols as usize + (s.col as usize - 1);
        cell * 8 + (s.grabbed as usize) * 4 + (s.active as usize) * 2 + s.open as usize
    }

    fn state_count(&self) -> usize {
        self.map.rows as usize * self.map.cols as usize * 8
    }

    fn abstract_state(&self, s: &GridState) -> SymbolicState {
        let cell = (s.row as usize - 1) * self.map.cols as usize + (s.col as usize - 1);
        self.abstractions[cell * 4 + (s.active as usize) * 2 + s.open as usize].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_language::parse_action_description;
    use crate::grounding::ground;

    fn world(row: u8, col: u8) -> (GroundDomain, GridWorld) {
        let g = ground(&parse_action_description(include_str!("../../data/gridworld.bc")).unwrap()).unwrap();
        let w = GridWorld::with_initial(GridMap::standard(), &g, GridWorld::fresh(row, col)).unwrap();
        (g, w)
    }

    #[test]
    fn fresh_state_abstraction() {
        let (g, w) = world(9, 8);
        assert_eq!(g.format_state(&w.abstract_state(w.state())), "{pos(9,8),~dooractive,~dooropen}");
    }

    #[test]
    fn bumper_penalties() {
        let (_, mut w) = world(6, 4);
        // (6,5) is red in the bundled layout
        assert_eq!(w.step(EnvAction(0)).unwrap().reward, -30.0);
        let (_, mut w) = world(8, 6);
        assert_eq!(w.step(EnvAction(0)).unwrap().reward, -15.0);
    }

    #[test]
    fn door_sequence() {
        let (_, mut w) = world(9, 9);
        assert_eq!(w.step(EnvAction(0)).unwrap().reward, -1.0);
        assert_eq!(w.state().col, 9);
        let r = w.step(EnvAction(PUSH_BASE + 10)).unwrap();
        assert_eq!((r.reward, r.failed), (-10.0, true));
        assert_eq!(r.next, GridWorld::fresh(9, 9));
        assert!(w.step(EnvAction(ROTATE_CW)).unwrap().failed);
        assert!(!w.step(EnvAction(GRAB_BASE + 25)).unwrap().failed);
        assert!(w.step(EnvAction(ROTATE_CCW)).unwrap().failed);
        assert!(!w.step(EnvAction(ROTATE_CW)).unwrap().failed);
        assert!(w.state().active);
        assert!(!w.step(EnvAction(PUSH_BASE + 39)).unwrap().failed);
        let r = w.step(EnvAction(0)).unwrap();
        assert!(r.done);
        assert_eq!((r.next.row, r.next.col), (9, 10));
    }

    #[test]
    fn action_names() {
        let (_, w) = world(1, 1);
        assert_eq!(w.action_count(), 128);
        assert_eq!(w.action_name(EnvAction(GRAB_BASE)), "grab(0)");
        assert_eq!(w.action_name(EnvAction(PUSH_BASE + 60)), "push(60)");
        assert_eq!(GridWorld::catalog().get("activate").unwrap().len(), 63);
    }
}
