use super::{ActionId, FluentId, GroundAtom, GroundDomain, GroundLaw, GroundingError, SymbolicState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successor {
    Next(SymbolicState),
    /// A nonexecutable law fired, or the action has no effect laws applicable.
    Inapplicable,
}

impl Successor {
    pub fn state(self) -> Option<SymbolicState> {
        match self {
            Successor::Next(s) => Some(s),
            Successor::Inapplicable => None,
        }
    }
}

type Partial = Vec<Option<u16>>;

impl GroundDomain {
    /// Completes a partial assignment: static closure, defaults, closure again.
    /// Fluents still undetermined afterwards are an error.
    pub fn initial_state(&self, atoms: &[GroundAtom]) -> Result<SymbolicState, GroundingError> {
        let mut assign: Partial = vec![None; self.fluents.len()];
        for a in atoms {
            self.assign(&mut assign, *a, None)?;
        }
        self.close(&mut assign)?;
        self.apply_defaults(&mut assign);
        self.close(&mut assign)?;
        self.complete(assign)
    }

    pub fn is_executable(&self, s: &SymbolicState, a: ActionId) -> bool {
        !self.nonexec_by_action[a.index()].iter().any(|&li| match &self.laws[li] {
            GroundLaw::Nonexecutable { body, .. } => s.satisfies(body),
            _ => false,
        })
    }

    /// Resolution order: direct effects, static closure, inertia for the
    /// fluents still open, closure, defaults, closure.
    pub fn successor(&self, s: &SymbolicState, a: ActionId) -> Result<Successor, GroundingError> {
        if !self.is_executable(s, a) {
            return Ok(Successor::Inapplicable);
        }
        let mut assign: Partial = vec![None; self.fluents.len()];
        let mut fired = false;
        for &li in &self.dynamic_by_action[a.index()] {
            if let GroundLaw::Dynamic { head, body, .. } = &self.laws[li] {
                if s.satisfies(body) {
                    fired = true;
                    if let Some(prev) = assign[head.fluent.index()] {
                        if prev != head.value {
                            return Err(GroundingError::Conflict {
                                fluent: self.fluent_name(head.fluent),
                                first: self.atom_to_string(GroundAtom {
                                    fluent: head.fluent,
                                    value: prev,
                                }),
                                second: self.atom_to_string(*head),
                            });
                        }
                    }
                    assign[head.fluent.index()] = Some(head.value);
                }
            }
        }
        if !fired {
            return Ok(Successor::Inapplicable);
        }
        self.close(&mut assign)?;
        for (i, slot) in assign.iter_mut().enumerate() {
            if slot.is_none() && self.inertial[i] {
                *slot = Some(s.0[i]);
            }
        }
        self.close(&mut assign)?;
        self.apply_defaults(&mut assign);
        self.close(&mut assign)?;
        self.complete(assign).map(Successor::Next)
    }

    /// Executable actions with a successor, in action-id order.
    pub fn successors(&self, s: &SymbolicState) -> Result<Vec<(ActionId, SymbolicState)>, GroundingError> {
        let mut out = Vec::new();
        for a in self.action_ids() {
            if let Successor::Next(t) = self.successor(s, a)? {
                out.push((a, t));
            }
        }
        Ok(out)
    }

    fn assign(&self, assign: &mut Partial, atom: GroundAtom, law: Option<usize>) -> Result<bool, GroundingError> {
        match assign[atom.fluent.index()] {
            None => {
                assign[atom.fluent.index()] = Some(atom.value);
                Ok(true)
            }
            Some(v) if v == atom.value => Ok(false),
            Some(_) => Err(GroundingError::Contradiction {
                law: match law {
                    Some(li) => crate::action_language::law_to_string(
                        &self.desc,
                        &self.desc.laws[self.law_source[li]],
                    ),
                    None => self.atom_to_string(atom),
                },
                fluent: self.fluent_name(atom.fluent),
            }),
        }
    }

    fn close(&self, assign: &mut Partial) -> Result<(), GroundingError> {
        loop {
            let mut changed = false;
            for &li in &self.static_laws {
                if let GroundLaw::Static { head, body } = &self.laws[li] {
                    let fires = body
                        .iter()
                        .all(|b| assign[b.fluent.index()] == Some(b.value));
                    if fires {
                        changed |= self.assign(assign, *head, Some(li))?;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn apply_defaults(&self, assign: &mut Partial) {
        for (i, slot) in assign.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = self.defaults[i];
            }
        }
    }

    fn complete(&self, assign: Partial) -> Result<SymbolicState, GroundingError> {
        let missing: Vec<String> = assign
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| self.fluent_name(FluentId(i as u32)))
            .collect();
        if !missing.is_empty() {
            return Err(GroundingError::Incomplete(missing));
        }
        Ok(SymbolicState(assign.into_iter().map(|v| v.unwrap_or(0)).collect()))
    }
}
