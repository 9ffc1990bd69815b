//! Abstract syntax for action descriptions.

use std::fmt;

/// A location in the source text. `line` and `col` are 1-based, `offset` is a
/// byte offset into the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Source positions attached to a parsed description.
///
/// Positions never take part in equality, so a description compares equal to
/// its pretty-printed-and-reparsed self.
#[derive(Debug, Clone, Default)]
pub struct Spans {
    pub sorts: Vec<Pos>,
    pub fluents: Vec<Pos>,
    pub actions: Vec<Pos>,
    pub laws: Vec<Pos>,
}

impl PartialEq for Spans {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A ground value. Booleans are kept apart from symbols so `f` and `f = true`
/// resolve to the same atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
    Tuple(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", b),
            Value::Int(i) => write!(f, "{}", i),
            Value::Sym(s) => f.write_str(s),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", v)?;
                }
                f.write_str(")")
            }
        }
    }
}

pub const BOOLEAN_SORT: &str = "boolean";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortDef {
    /// `{a, b, 3}`
    Enum(Vec<Value>),
    /// `lo..hi`, inclusive
    Range(i64, i64),
    /// `row * col`; values are tuples
    Product(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDecl {
    pub name: String,
    pub def: SortDef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
    /// Sort name, or [`BOOLEAN_SORT`].
    pub value_sort: String,
}

impl FluentDecl {
    pub fn is_boolean(&self) -> bool {
        self.value_sort == BOOLEAN_SORT
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
}

/// Argument or value term. `Offset` is the only arithmetic allowed: `X+k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Value),
    Var(String),
    Offset(String, i64),
    Tuple(Vec<Term>),
}

impl Term {
    pub fn int(i: i64) -> Term {
        Term::Const(Value::Int(i))
    }

    pub fn sym(s: &str) -> Term {
        Term::Const(Value::Sym(s.to_string()))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) | Term::Offset(..) => false,
            Term::Tuple(items) => items.iter().all(Term::is_ground),
        }
    }

    /// Collects variable names in order of first appearance.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) | Term::Offset(v, _) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Tuple(items) => items.iter().for_each(|t| t.collect_vars(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FluentAtom {
    pub fluent: String,
    pub args: Vec<Term>,
    pub value: Term,
}

impl FluentAtom {
    pub fn boolean(fluent: &str, args: Vec<Term>, value: bool) -> Self {
        FluentAtom {
            fluent: fluent.to_string(),
            args,
            value: Term::Const(Value::Bool(value)),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
        self.value.collect_vars(out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionTerm {
    pub name: String,
    pub args: Vec<Term>,
}

impl ActionTerm {
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawKind {
    Static,
    Dynamic,
    Nonexecutable,
    Inertial,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CausalLaw {
    /// `A if A1, ..., Am.`
    Static { head: FluentAtom, body: Vec<FluentAtom> },
    /// `a causes A if A1, ..., Am.`
    Dynamic {
        action: ActionTerm,
        head: FluentAtom,
        body: Vec<FluentAtom>,
    },
    /// `nonexecutable a if A1, ..., Am.`
    Nonexecutable {
        action: ActionTerm,
        body: Vec<FluentAtom>,
    },
    /// `inertial f.`
    Inertial { fluent: String },
    /// `default f = v.`
    Default { head: FluentAtom },
}

impl CausalLaw {
    pub fn kind(&self) -> LawKind {
        match self {
            CausalLaw::Static { .. } => LawKind::Static,
            CausalLaw::Dynamic { .. } => LawKind::Dynamic,
            CausalLaw::Nonexecutable { .. } => LawKind::Nonexecutable,
            CausalLaw::Inertial { .. } => LawKind::Inertial,
            CausalLaw::Default { .. } => LawKind::Default,
        }
    }

    pub fn head(&self) -> Option<&FluentAtom> {
        match self {
            CausalLaw::Static { head, .. }
            | CausalLaw::Dynamic { head, .. }
            | CausalLaw::Default { head } => Some(head),
            _ => None,
        }
    }

    pub fn body(&self) -> &[FluentAtom] {
        match self {
            CausalLaw::Static { body, .. }
            | CausalLaw::Dynamic { body, .. }
            | CausalLaw::Nonexecutable { body, .. } => body,
            _ => &[],
        }
    }

    pub fn action(&self) -> Option<&ActionTerm> {
        match self {
            CausalLaw::Dynamic { action, .. } | CausalLaw::Nonexecutable { action, .. } => {
                Some(action)
            }
            _ => None,
        }
    }

    /// All variables of the law, body first, then action, then head.
    pub fn variables(&self) -> Vec<String> {
        let mut vars = Vec::new();
        for atom in self.body() {
            atom.collect_vars(&mut vars);
        }
        if let Some(a) = self.action() {
            a.collect_vars(&mut vars);
        }
        if let Some(h) = self.head() {
            h.collect_vars(&mut vars);
        }
        vars
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionDescription {
    pub sorts: Vec<SortDecl>,
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<ActionDecl>,
    pub laws: Vec<CausalLaw>,
    pub spans: Spans,
}

impl ActionDescription {
    pub fn sort(&self, name: &str) -> Option<&SortDecl> {
        self.sorts.iter().find(|s| s.name == name)
    }

    pub fn fluent(&self, name: &str) -> Option<&FluentDecl> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Finite domain of a declared sort, in declaration order. Product sorts
    /// enumerate in row-major order.
    pub fn sort_domain(&self, name: &str) -> Option<Vec<Value>> {
        if name == BOOLEAN_SORT {
            return Some(vec![Value::Bool(false), Value::Bool(true)]);
        }
        self.sort_domain_depth(name, 0)
    }

    fn sort_domain_depth(&self, name: &str, depth: usize) -> Option<Vec<Value>> {
        if depth > self.sorts.len() {
            return None;
        }
        match &self.sort(name)?.def {
            SortDef::Enum(values) => Some(values.clone()),
            SortDef::Range(lo, hi) => Some((*lo..=*hi).map(Value::Int).collect()),
            SortDef::Product(parts) => {
                let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
                for part in parts {
                    let dom = if part == BOOLEAN_SORT {
                        vec![Value::Bool(false), Value::Bool(true)]
                    } else {
                        self.sort_domain_depth(part, depth + 1)?
                    };
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
                Some(acc.into_iter().map(Value::Tuple).collect())
            }
        }
    }

    /// Component sorts when `name` is a product sort.
    pub fn product_parts(&self, name: &str) -> Option<&[String]> {
        match &self.sort(name)?.def {
            SortDef::Product(parts) => Some(parts),
            _ => None,
        }
    }

    pub fn law_pos(&self, index: usize) -> Option<Pos> {
        self.spans.laws.get(index).copied()
    }
}
