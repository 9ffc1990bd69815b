use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use super::{ActionId, GroundDomain, GroundingError, SymbolicState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: usize,
    pub action: ActionId,
    pub to: usize,
}

/// States reachable from an initial state, numbered in breadth-first order.
#[derive(Debug, Clone, Default)]
pub struct Reachable {
    pub states: Vec<SymbolicState>,
    pub transitions: Vec<Transition>,
    index: HashMap<SymbolicState, usize>,
}

impl Reachable {
    pub fn id(&self, s: &SymbolicState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Outgoing transitions grouped by source id.
    pub fn adjacency(&self) -> Vec<Vec<(ActionId, usize)>> {
        let mut adj = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            adj[t.from].push((t.action, t.to));
        }
        adj
    }
}

pub fn enumerate_reachable(
    g: &GroundDomain,
    init: &SymbolicState,
    cap: usize,
) -> Result<Reachable, GroundingError> {
    let mut r = Reachable::default();
    let mut queue = VecDeque::new();
    r.index.insert(init.clone(), 0);
    r.states.push(init.clone());
    queue.push_back(0usize);
    while let Some(id) = queue.pop_front() {
        let s = r.states[id].clone();
        for (a, t) in g.successors(&s)? {
            let to = match r.index.get(&t) {
                Some(&k) => k,
                None => {
                    if r.states.len() >= cap {
                        return Err(GroundingError::StateCap { cap });
                    }
                    let k = r.states.len();
                    r.index.insert(t.clone(), k);
                    r.states.push(t);
                    queue.push_back(k);
                    k
                }
            };
            r.transitions.push(Transition { from: id, action: a, to });
        }
    }
    Ok(r)
}

/// `STATE <id> <atoms>` lines followed by `TRANS <from> <action> <to>` lines.
pub fn dump_transition_system(g: &GroundDomain, r: &Reachable) -> String {
    let mut out = String::new();
    for (i, s) in r.states.iter().enumerate() {
        let f = g.format_state(s);
        let _ = writeln!(out, "STATE {} {}", i, &f[1..f.len() - 1]);
    }
    for t in &r.transitions {
        let _ = writeln!(out, "TRANS {} {} {}", t.from, g.action_name(t.action), t.to);
    }
    out
}

/// Memoised `successors` for repeated queries during learning.
#[derive(Debug, Default)]
pub struct SuccessorCache {
    map: HashMap<SymbolicState, Vec<(ActionId, SymbolicState)>>,
}

impl SuccessorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &mut self,
        g: &GroundDomain,
        s: &SymbolicState,
    ) -> Result<&[(ActionId, SymbolicState)], GroundingError> {
        if !self.map.contains_key(s) {
            let succ = g.successors(s)?;
            self.map.insert(s.clone(), succ);
        }
        Ok(&self.map[s])
    }

    pub fn successor(
        &mut self,
        g: &GroundDomain,
        s: &SymbolicState,
        a: ActionId,
    ) -> Result<Option<SymbolicState>, GroundingError> {
        Ok(self
            .get(g, s)?
            .iter()
            .find(|(b, _)| *b == a)
            .map(|(_, t)| t.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_language::parse_action_description;
    use crate::grounding::ground;
    use std::collections::HashSet;

    #[test]
    fn toy_grid_reachability_matches_flood_fill() {
        let src = "sort row = 1..3.\nsort col = 1..3.\nsort cell = row * col.\nsort dir = {e, w}.\n\
                   fluent at : cell.\naction move(dir).\n\
                   move(e) causes at(X,Y+1) if at(X,Y).\nmove(w) causes at(X,Y-1) if at(X,Y).\n\
                   inertial at.\n";
        let g = ground(&parse_action_description(src).unwrap()).unwrap();
        let s = g.parse_state("at(2,1)").unwrap();
        let r = enumerate_reachable(&g, &s, 100).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.transitions.len(), 4);
        assert!(matches!(
            enumerate_reachable(&g, &s, 2),
            Err(GroundingError::StateCap { cap: 2 })
        ));
        let dump = dump_transition_system(&g, &r);
        assert!(dump.starts_with("STATE 0 at(2,1)\n"));
        assert!(dump.contains("TRANS 0 move(e) 1\n"));
    }

    #[test]
    fn gridworld_reachable_set_is_closed() {
        let g = ground(&parse_action_description(include_str!("../../data/gridworld.bc")).unwrap()).unwrap();
        let s = g.parse_state("pos(9,1), ~dooractive, ~dooropen").unwrap();
        let r = enumerate_reachable(&g, &s, 10_000).unwrap();
        let ids: HashSet<_> = r.states.iter().collect();
        assert_eq!(ids.len(), r.len());
        for t in &r.transitions {
            assert_eq!(
                g.successor(&r.states[t.from], t.action).unwrap().state().as_ref(),
                Some(&r.states[t.to])
            );
        }
        let goal = g.parse_state("pos(9,10), dooractive, dooropen").unwrap();
        assert!(r.id(&goal).is_some());
    }
}
