//! Grounding of an action description into an explicit finite transition
//! system: ground fluents and actions, instantiated laws, and the state
//! semantics built on top of them.

mod reach;
mod semantics;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::action_language::{
    atom_to_string, eval_term, render, validate, var_sorts, ActionDescription, CausalLaw,
    Diagnostic, FluentAtom, Term, Value,
};

pub use reach::{dump_transition_system, enumerate_reachable, Reachable, SuccessorCache, Transition};
pub use semantics::Successor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FluentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

impl FluentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `fluent = domain[value]`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub fluent: FluentId,
    pub value: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundFluent {
    pub name: String,
    pub args: Vec<Value>,
    pub domain: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<Value>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", args.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundLaw {
    Static {
        head: GroundAtom,
        body: Vec<GroundAtom>,
    },
    Dynamic {
        action: ActionId,
        head: GroundAtom,
        body: Vec<GroundAtom>,
    },
    Nonexecutable {
        action: ActionId,
        body: Vec<GroundAtom>,
    },
    Inertial {
        fluent: FluentId,
    },
    Default {
        head: GroundAtom,
    },
}

/// A complete assignment: one value index per ground fluent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState(pub Vec<u16>);

impl SymbolicState {
    pub fn value(&self, fluent: FluentId) -> u16 {
        self.0[fluent.index()]
    }

    pub fn holds(&self, atom: GroundAtom) -> bool {
        self.0[atom.fluent.index()] == atom.value
    }

    pub fn satisfies(&self, atoms: &[GroundAtom]) -> bool {
        atoms.iter().all(|a| self.holds(*a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicTransition {
    pub from: SymbolicState,
    pub action: ActionId,
    pub to: SymbolicState,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundConfig {
    /// Upper bound on the number of law instances (before filtering).
    pub max_instances: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            max_instances: 2_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundingError {
    #[error("description is invalid:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("grounding `{law}` needs {instances} instances, cap is {cap} ({total} so far)")]
    TooLarge {
        law: String,
        instances: usize,
        total: usize,
        cap: usize,
    },
    #[error("conflicting effects on `{fluent}`: `{first}` vs `{second}`")]
    Conflict {
        fluent: String,
        first: String,
        second: String,
    },
    #[error("static law `{law}` contradicts the assignment of `{fluent}`")]
    Contradiction { law: String, fluent: String },
    #[error("no value for: {}", .0.join(", "))]
    Incomplete(Vec<String>),
    #[error("unknown ground atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("more than {cap} reachable states")]
    StateCap { cap: usize },
}

/// The grounded transition system of an action description.
#[derive(Debug, Clone)]
pub struct GroundDomain {
    desc: ActionDescription,
    fluents: Vec<GroundFluent>,
    actions: Vec<GroundAction>,
    laws: Vec<GroundLaw>,
    law_source: Vec<usize>,
    fluent_index: HashMap<(String, Vec<Value>), FluentId>,
    action_index: HashMap<(String, Vec<Value>), ActionId>,
    static_laws: Vec<usize>,
    dynamic_by_action: Vec<Vec<usize>>,
    nonexec_by_action: Vec<Vec<usize>>,
    inertial: Vec<bool>,
    defaults: Vec<Option<u16>>,
}

pub fn ground(desc: &ActionDescription) -> Result<GroundDomain, GroundingError> {
    ground_with(desc, GroundConfig::default())
}

pub fn ground_with(desc: &ActionDescription, cfg: GroundConfig) -> Result<GroundDomain, GroundingError> {
    let diags = validate(desc);
    if !diags.is_empty() {
        return Err(GroundingError::Invalid(diags));
    }

    let mut fluents = Vec::new();
    let mut fluent_index = HashMap::new();
    for decl in &desc.fluents {
        let domain = desc.sort_domain(&decl.value_sort).unwrap_or_default();
        for args in cartesian(desc, &decl.arg_sorts) {
            let id = FluentId(fluents.len() as u32);
            fluent_index.insert((decl.name.clone(), args.clone()), id);
            fluents.push(GroundFluent {
                name: decl.name.clone(),
                args,
                domain: domain.clone(),
            });
        }
    }
    let mut actions = Vec::new();
    let mut action_index = HashMap::new();
    for decl in &desc.actions {
        for args in cartesian(desc, &decl.arg_sorts) {
            let id = ActionId(actions.len() as u32);
            action_index.insert((decl.name.clone(), args.clone()), id);
            actions.push(GroundAction {
                name: decl.name.clone(),
                args,
            });
        }
    }

    let mut g = GroundDomain {
        desc: desc.clone(),
        fluents,
        actions,
        laws: Vec::new(),
        law_source: Vec::new(),
        fluent_index,
        action_index,
        static_laws: Vec::new(),
        dynamic_by_action: Vec::new(),
        nonexec_by_action: Vec::new(),
        inertial: Vec::new(),
        defaults: Vec::new(),
    };

    let mut total = 0usize;
    for (li, law) in desc.laws.iter().enumerate() {
        if let CausalLaw::Inertial { fluent } = law {
            for (i, f) in g.fluents.iter().enumerate() {
                if &f.name == fluent {
                    g.laws.push(GroundLaw::Inertial {
                        fluent: FluentId(i as u32),
                    });
                    g.law_source.push(li);
                }
            }
            continue;
        }
        let sorts = var_sorts(desc, law);
        let vars = law.variables();
        let domains: Vec<Vec<Value>> = vars
            .iter()
            .map(|v| sorts.get(v).and_then(|s| desc.sort_domain(s)).unwrap_or_default())
            .collect();
        let instances = domains.iter().map(Vec::len).product::<usize>();
        total = total.saturating_add(instances);
        if total > cfg.max_instances {
            return Err(GroundingError::TooLarge {
                law: crate::action_language::law_to_string(desc, law),
                instances,
                total,
                cap: cfg.max_instances,
            });
        }
        let mut binding = HashMap::new();
        let mut counters = vec![0usize; vars.len()];
        if domains.iter().any(Vec::is_empty) {
            continue;
        }
        loop {
            for (k, v) in vars.iter().enumerate() {
                binding.insert(v.clone(), domains[k][counters[k]].clone());
            }
            if let Some(gl) = g.instantiate(law, &binding) {
                g.laws.push(gl);
                g.law_source.push(li);
            }
            // odometer increment, last variable fastest
            let mut k = vars.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                counters[k] += 1;
                if counters[k] < domains[k].len() {
                    break;
                }
                counters[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if vars.is_empty() || k == usize::MAX {
                break;
            }
        }
    }
    g.index_laws();
    Ok(g)
}

fn cartesian(desc: &ActionDescription, sorts: &[String]) -> Vec<Vec<Value>> {
    let mut acc = vec![Vec::new()];
    for s in sorts {
        let dom = desc.sort_domain(s).unwrap_or_default();
        let mut next = Vec::with_capacity(acc.len() * dom.len());
        for prefix in &acc {
            for v in &dom {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Converts a ground value into a constant term, expanding tuples so the
/// pretty printer can use its shorthand.
fn value_term(v: &Value) -> Term {
    match v {
        Value::Tuple(items) => Term::Tuple(items.iter().map(value_term).collect()),
        other => Term::Const(other.clone()),
    }
}

impl GroundDomain {
    pub fn description(&self) -> &ActionDescription {
        &self.desc
    }

    pub fn ground_fluents(&self) -> &[GroundFluent] {
        &self.fluents
    }

    pub fn ground_actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn ground_laws(&self) -> &[GroundLaw] {
        &self.laws
    }

    /// Index into `description().laws` of the law a ground law came from.
    pub fn law_origin(&self, ground_law: usize) -> usize {
        self.law_source[ground_law]
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len()).map(|i| ActionId(i as u32))
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.index()]
    }

    pub fn action_name(&self, id: ActionId) -> String {
        self.actions[id.index()].to_string()
    }

    pub fn fluent(&self, id: FluentId) -> &GroundFluent {
        &self.fluents[id.index()]
    }

    pub fn fluent_id(&self, name: &str, args: &[Value]) -> Option<FluentId> {
        self.fluent_index.get(&(name.to_string(), args.to_vec())).copied()
    }

    pub fn action_id(&self, name: &str, args: &[Value]) -> Option<ActionId> {
        self.action_index.get(&(name.to_string(), args.to_vec())).copied()
    }

    /// Looks up a ground action by its printed form, e.g. `move(e)`.
    pub fn action_by_name(&self, text: &str) -> Result<ActionId, GroundingError> {
        self.action_ids()
            .find(|&a| self.action_name(a) == text.trim())
            .ok_or_else(|| GroundingError::UnknownAction(text.to_string()))
    }

    /// Builds a ground atom from a fluent name, its arguments and a value.
    pub fn atom(&self, name: &str, args: &[Value], value: &Value) -> Option<GroundAtom> {
        let f = self.fluent_id(name, args)?;
        let v = self.fluents[f.index()].domain.iter().position(|d| d == value)?;
        Some(GroundAtom {
            fluent: f,
            value: v as u16,
        })
    }

    pub fn resolve_atom(&self, atom: &FluentAtom) -> Result<GroundAtom, GroundingError> {
        let empty = HashMap::new();
        let unknown = || GroundingError::UnknownAtom(atom_to_string(&self.desc, atom));
        let args = atom
            .args
            .iter()
            .map(|t| eval_term(t, &empty))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(unknown)?;
        let value = eval_term(&atom.value, &empty).ok_or_else(unknown)?;
        self.atom(&atom.fluent, &args, &value).ok_or_else(unknown)
    }

    pub fn resolve_atoms(&self, atoms: &[FluentAtom]) -> Result<Vec<GroundAtom>, GroundingError> {
        atoms.iter().map(|a| self.resolve_atom(a)).collect()
    }

    /// Parses `a, b, c` (optionally wrapped in braces) into ground atoms.
    pub fn parse_ground_atoms(&self, text: &str) -> Result<Vec<GroundAtom>, GroundingError> {
        let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
        let atoms = crate::action_language::parse_atoms(inner, &self.desc)
            .map_err(GroundingError::Invalid)?;
        self.resolve_atoms(&atoms)
    }

    pub fn atom_to_string(&self, atom: GroundAtom) -> String {
        let f = &self.fluents[atom.fluent.index()];
        let fa = FluentAtom {
            fluent: f.name.clone(),
            args: f.args.iter().map(value_term).collect(),
            value: value_term(&f.domain[atom.value as usize]),
        };
        atom_to_string(&self.desc, &fa)
    }

    pub fn state_atoms(&self, s: &SymbolicState) -> Vec<GroundAtom> {
        s.0.iter()
            .enumerate()
            .map(|(i, &v)| GroundAtom {
                fluent: FluentId(i as u32),
                value: v,
            })
            .collect()
    }

    /// `{pos(9,8),~dooractive,~dooropen}`; contains no whitespace.
    pub fn format_state(&self, s: &SymbolicState) -> String {
        let atoms: Vec<String> = self
            .state_atoms(s)
            .into_iter()
            .map(|a| self.atom_to_string(a).replace(' ', ""))
            .collect();
        format!("{{{}}}", atoms.join(","))
    }

    /// Atoms that differ between two states, rendered as in `to`.
    pub fn state_diff(&self, from: &SymbolicState, to: &SymbolicState) -> Vec<String> {
        self.state_atoms(to)
            .into_iter()
            .filter(|a| !from.holds(*a))
            .map(|a| self.atom_to_string(a))
            .collect()
    }

    pub fn parse_state(&self, text: &str) -> Result<SymbolicState, GroundingError> {
        let atoms = self.parse_ground_atoms(text)?;
        self.initial_state(&atoms)
    }

    fn instantiate(&self, law: &CausalLaw, binding: &HashMap<String, Value>) -> Option<GroundLaw> {
        let atom = |a: &FluentAtom| -> Option<GroundAtom> {
            let args = a
                .args
                .iter()
                .map(|t| eval_term(t, binding))
                .collect::<Option<Vec<_>>>()?;
            let value = eval_term(&a.value, binding)?;
            self.atom(&a.fluent, &args, &value)
        };
        let body = |b: &[FluentAtom]| b.iter().map(atom).collect::<Option<Vec<_>>>();
        let action = |t: &crate::action_language::ActionTerm| -> Option<ActionId> {
            let args = t
                .args
                .iter()
                .map(|x| eval_term(x, binding))
                .collect::<Option<Vec<_>>>()?;
            self.action_id(&t.name, &args)
        };
        // Instances whose terms leave their sorts (e.g. pos(X,21)) are dropped.
        Some(match law {
            CausalLaw::Static { head, body: b } => GroundLaw::Static {
                head: atom(head)?,
                body: body(b)?,
            },
            CausalLaw::Dynamic {
                action: a,
                head,
                body: b,
            } => GroundLaw::Dynamic {
                action: action(a)?,
                head: atom(head)?,
                body: body(b)?,
            },
            CausalLaw::Nonexecutable { action: a, body: b } => GroundLaw::Nonexecutable {
                action: action(a)?,
                body: body(b)?,
            },
            CausalLaw::Default { head } => GroundLaw::Default { head: atom(head)? },
            CausalLaw::Inertial { .. } => return None,
        })
    }

    fn index_laws(&mut self) {
        let n_actions = self.actions.len();
        self.static_laws.clear();
        self.dynamic_by_action = vec![Vec::new(); n_actions];
        self.nonexec_by_action = vec![Vec::new(); n_actions];
        self.inertial = vec![false; self.fluents.len()];
        self.defaults = vec![None; self.fluents.len()];
        for (i, law) in self.laws.iter().enumerate() {
            match law {
                GroundLaw::Static { .. } => self.static_laws.push(i),
                GroundLaw::Dynamic { action, .. } => self.dynamic_by_action[action.index()].push(i),
                GroundLaw::Nonexecutable { action, .. } => {
                    self.nonexec_by_action[action.index()].push(i)
                }
                GroundLaw::Inertial { fluent } => self.inertial[fluent.index()] = true,
                GroundLaw::Default { head } => self.defaults[head.fluent.index()] = Some(head.value),
            }
        }
    }

    pub fn is_inertial(&self, f: FluentId) -> bool {
        self.inertial[f.index()]
    }

    pub fn default_value(&self, f: FluentId) -> Option<u16> {
        self.defaults[f.index()]
    }

    pub fn fluent_name(&self, f: FluentId) -> String {
        let gf = &self.fluents[f.index()];
        if gf.args.is_empty() {
            gf.name.clone()
        } else {
            let args: Vec<String> = gf.args.iter().map(|v| v.to_string()).collect();
            format!("{}({})", gf.name, args.join(","))
        }
    }
}
