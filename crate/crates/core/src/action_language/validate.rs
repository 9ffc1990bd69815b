use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diagnostics::{Diagnostic, DiagnosticKind};
use super::pretty::law_to_string;

/// Checks every declaration and law invariant. Returns one diagnostic per
/// violation; an empty list means the description can be grounded.
pub fn validate(desc: &ActionDescription) -> Vec<Diagnostic> {
    let mut v = Validator {
        desc,
        diags: Vec::new(),
    };
    v.declarations();
    for (i, law) in desc.laws.iter().enumerate() {
        v.law(i, law);
    }
    v.defaults();
    v.diags
}

/// Infers the sort of each variable in a law from the first position it
/// occupies (body atoms, then the action, then the head).
pub fn var_sorts(desc: &ActionDescription, law: &CausalLaw) -> HashMap<String, String> {
    let mut sorts = HashMap::new();
    for atom in law.body() {
        atom_var_sorts(desc, atom, &mut sorts);
    }
    if let Some(action) = law.action() {
        if let Some(decl) = desc.action(&action.name) {
            for (t, s) in action.args.iter().zip(&decl.arg_sorts) {
                term_var_sorts(desc, t, s, &mut sorts);
            }
        }
    }
    if let Some(head) = law.head() {
        atom_var_sorts(desc, head, &mut sorts);
    }
    sorts
}

fn atom_var_sorts(desc: &ActionDescription, atom: &FluentAtom, out: &mut HashMap<String, String>) {
    if let Some(decl) = desc.fluent(&atom.fluent) {
        for (t, s) in atom.args.iter().zip(&decl.arg_sorts) {
            term_var_sorts(desc, t, s, out);
        }
        term_var_sorts(desc, &atom.value, &decl.value_sort, out);
    }
}

fn term_var_sorts(desc: &ActionDescription, t: &Term, sort: &str, out: &mut HashMap<String, String>) {
    match t {
        Term::Const(_) => {}
        Term::Var(v) | Term::Offset(v, _) => {
            out.entry(v.clone()).or_insert_with(|| sort.to_string());
        }
        Term::Tuple(items) => {
            if let Some(parts) = desc.product_parts(sort) {
                for (item, part) in items.iter().zip(parts) {
                    term_var_sorts(desc, item, part, out);
                }
            }
        }
    }
}

struct Validator<'a> {
    desc: &'a ActionDescription,
    diags: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn push(&mut self, kind: DiagnosticKind, msg: String, pos: Option<Pos>) {
        self.diags.push(Diagnostic::new(kind, msg, pos));
    }

    fn sort_known(&self, name: &str) -> bool {
        name == BOOLEAN_SORT || self.desc.sort(name).is_some()
    }

    fn declarations(&mut self) {
        let d = self.desc;
        let mut seen = HashSet::new();
        for (i, s) in d.sorts.iter().enumerate() {
            let pos = d.spans.sorts.get(i).copied();
            if !seen.insert(("sort", s.name.as_str())) || s.name == BOOLEAN_SORT {
                self.push(
                    DiagnosticKind::DuplicateDeclaration,
                    format!("sort `{}` declared more than once", s.name),
                    pos,
                );
            }
            match &s.def {
                SortDef::Enum(values) => {
                    if values.is_empty() {
                        self.push(DiagnosticKind::InvalidSort, format!("sort `{}` is empty", s.name), pos);
                    }
                    let mut uniq = HashSet::new();
                    for v in values {
                        if !uniq.insert(v) {
                            self.push(
                                DiagnosticKind::InvalidSort,
                                format!("sort `{}` lists `{}` twice", s.name, v),
                                pos,
                            );
                        }
                    }
                }
                SortDef::Range(lo, hi) => {
                    if lo > hi {
                        self.push(DiagnosticKind::InvalidSort, format!("sort `{}` is empty", s.name), pos);
                    }
                }
                SortDef::Product(parts) => {
                    for p in parts {
                        if !self.sort_known(p) {
                            self.push(
                                DiagnosticKind::UndeclaredSymbol,
                                format!("undeclared sort `{}`", p),
                                pos,
                            );
                        }
                    }
                    if parts.iter().all(|p| self.sort_known(p)) && d.sort_domain(&s.name).is_none() {
                        self.push(
                            DiagnosticKind::InvalidSort,
                            format!("sort `{}` is defined in terms of itself", s.name),
                            pos,
                        );
                    }
                }
            }
        }
        for (i, f) in d.fluents.iter().enumerate() {
            let pos = d.spans.fluents.get(i).copied();
            if !seen.insert(("fluent", f.name.as_str())) {
                self.push(
                    DiagnosticKind::DuplicateDeclaration,
                    format!("fluent `{}` declared more than once", f.name),
                    pos,
                );
            }
            for s in f.arg_sorts.iter().chain(std::iter::once(&f.value_sort)) {
                if !self.sort_known(s) {
                    self.push(DiagnosticKind::UndeclaredSymbol, format!("undeclared sort `{}`", s), pos);
                }
            }
        }
        for (i, a) in d.actions.iter().enumerate() {
            let pos = d.spans.actions.get(i).copied();
            if !seen.insert(("action", a.name.as_str())) {
                self.push(
                    DiagnosticKind::DuplicateDeclaration,
                    format!("action `{}` declared more than once", a.name),
                    pos,
                );
            }
            for s in &a.arg_sorts {
                if !self.sort_known(s) {
                    self.push(DiagnosticKind::UndeclaredSymbol, format!("undeclared sort `{}`", s), pos);
                }
            }
        }
    }

    fn term(&mut self, t: &Term, sort: &str, pos: Option<Pos>) {
        match t {
            Term::Const(v) => {
                if let Some(dom) = self.desc.sort_domain(sort) {
                    if !dom.contains(v) {
                        self.push(
                            DiagnosticKind::ValueOutOfSort,
                            format!("`{}` is not in sort `{}`", v, sort),
                            pos,
                        );
                    }
                }
            }
            Term::Var(_) => {}
            Term::Offset(v, _) => {
                let integral = matches!(self.desc.sort(sort).map(|s| &s.def), Some(SortDef::Range(..)))
                    || self
                        .desc
                        .sort_domain(sort)
                        .is_some_and(|d| d.iter().all(|x| matches!(x, Value::Int(_))));
                if !integral {
                    self.push(
                        DiagnosticKind::InvalidLaw,
                        format!("arithmetic on `{}` in non-integer sort `{}`", v, sort),
                        pos,
                    );
                }
            }
            Term::Tuple(items) => match self.desc.product_parts(sort) {
                Some(parts) if parts.len() == items.len() => {
                    let parts = parts.to_vec();
                    for (item, part) in items.iter().zip(&parts) {
                        self.term(item, part, pos);
                    }
                }
                _ => self.push(
                    DiagnosticKind::ValueOutOfSort,
                    format!("tuple does not match sort `{}`", sort),
                    pos,
                ),
            },
        }
    }

    fn atom(&mut self, atom: &FluentAtom, pos: Option<Pos>) {
        let Some(decl) = self.desc.fluent(&atom.fluent) else {
            self.push(
                DiagnosticKind::UndeclaredSymbol,
                format!("undeclared fluent `{}`", atom.fluent),
                pos,
            );
            return;
        };
        if decl.arg_sorts.len() != atom.args.len() {
            self.push(
                DiagnosticKind::ArityMismatch,
                format!(
                    "fluent `{}` expects {} argument(s), found {}",
                    atom.fluent,
                    decl.arg_sorts.len(),
                    atom.args.len()
                ),
                pos,
            );
            return;
        }
        let decl = decl.clone();
        for (t, s) in atom.args.iter().zip(&decl.arg_sorts) {
            self.term(t, s, pos);
        }
        self.term(&atom.value, &decl.value_sort, pos);
    }

    fn action(&mut self, action: &ActionTerm, pos: Option<Pos>) {
        let Some(decl) = self.desc.action(&action.name) else {
            self.push(
                DiagnosticKind::UndeclaredSymbol,
                format!("undeclared action `{}`", action.name),
                pos,
            );
            return;
        };
        if decl.arg_sorts.len() != action.args.len() {
            self.push(
                DiagnosticKind::ArityMismatch,
                format!(
                    "action `{}` expects {} argument(s), found {}",
                    action.name,
                    decl.arg_sorts.len(),
                    action.args.len()
                ),
                pos,
            );
            return;
        }
        let sorts = decl.arg_sorts.clone();
        for (t, s) in action.args.iter().zip(&sorts) {
            self.term(t, s, pos);
        }
    }

    fn law(&mut self, index: usize, law: &CausalLaw) {
        let pos = self.desc.law_pos(index);
        if let CausalLaw::Inertial { fluent } = law {
            if self.desc.fluent(fluent).is_none() {
                self.push(
                    DiagnosticKind::UndeclaredSymbol,
                    format!("undeclared fluent `{}`", fluent),
                    pos,
                );
            }
            return;
        }
        if let Some(h) = law.head() {
            self.atom(h, pos);
        }
        for a in law.body() {
            self.atom(a, pos);
        }
        if let Some(a) = law.action() {
            self.action(a, pos);
        }

        // Defaults and nonexecutable actions quantify their variables over
        // the declared sorts; heads of static and dynamic laws must be bound.
        if matches!(law, CausalLaw::Static { .. } | CausalLaw::Dynamic { .. }) {
            let mut bound = Vec::new();
            for a in law.body() {
                a.collect_vars(&mut bound);
            }
            if let Some(a) = law.action() {
                a.collect_vars(&mut bound);
            }
            let mut head_vars = Vec::new();
            if let Some(h) = law.head() {
                h.collect_vars(&mut head_vars);
            }
            let unsafe_vars: Vec<_> = head_vars.into_iter().filter(|v| !bound.contains(v)).collect();
            if !unsafe_vars.is_empty() {
                self.push(
                    DiagnosticKind::UnsafeVariable,
                    format!(
                        "unsafe variable(s) {} in `{}`",
                        unsafe_vars.join(", "),
                        law_to_string(self.desc, law)
                    ),
                    pos,
                );
            }
        }
    }

    fn defaults(&mut self) {
        let mut owner: HashMap<(String, Vec<Value>), usize> = HashMap::new();
        for (i, law) in self.desc.laws.iter().enumerate() {
            let CausalLaw::Default { head } = law else { continue };
            let sorts = var_sorts(self.desc, law);
            let mut clash = None;
            for binding in bindings(self.desc, &sorts, &head.args) {
                let Some(args) = head
                    .args
                    .iter()
                    .map(|t| eval_term(t, &binding))
                    .collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let key = (head.fluent.clone(), args);
                match owner.get(&key) {
                    Some(&j) if j != i => {
                        clash = Some((j, key.1));
                        break;
                    }
                    _ => {
                        owner.insert(key, i);
                    }
                }
            }
            if let Some((j, args)) = clash {
                let shown = args.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                self.push(
                    DiagnosticKind::DuplicateDefault,
                    format!(
                        "second default for `{}({})`; first given by `{}`",
                        head.fluent,
                        shown,
                        law_to_string(self.desc, &self.desc.laws[j])
                    ),
                    self.desc.law_pos(i),
                );
            }
        }
    }
}

/// All variable assignments for the variables occurring in `terms`.
fn bindings(
    desc: &ActionDescription,
    sorts: &HashMap<String, String>,
    terms: &[Term],
) -> Vec<HashMap<String, Value>> {
    let mut vars = Vec::new();
    terms.iter().for_each(|t| t.collect_vars(&mut vars));
    let mut out = vec![HashMap::new()];
    for v in vars {
        let dom = sorts
            .get(&v)
            .and_then(|s| desc.sort_domain(s))
            .unwrap_or_default();
        let mut next = Vec::new();
        for b in &out {
            for value in &dom {
                let mut nb = b.clone();
                nb.insert(v.clone(), value.clone());
                next.push(nb);
            }
        }
        out = next;
    }
    out
}

/// Evaluates a term under a binding. `None` if a variable is unbound or an
/// offset is applied to a non-integer.
pub fn eval_term(t: &Term, binding: &HashMap<String, Value>) -> Option<Value> {
    match t {
        Term::Const(v) => Some(v.clone()),
        Term::Var(v) => binding.get(v).cloned(),
        Term::Offset(v, k) => match binding.get(v)? {
            Value::Int(i) => Some(Value::Int(i + k)),
            _ => None,
        },
        Term::Tuple(items) => items
            .iter()
            .map(|i| eval_term(i, binding))
            .collect::<Option<Vec<_>>>()
            .map(Value::Tuple),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_action_description;
    use super::*;

    const DECLS: &str = "sort row = 1..3.\nsort col = 1..3.\nsort cell = row * col.\n\
        sort dir = {e, w}.\nfluent pos : cell.\nfluent lit.\nfluent mark(row).\naction move(dir).\n";

    fn diags(laws: &str) -> Vec<Diagnostic> {
        validate(&parse_action_description(&format!("{}{}", DECLS, laws)).unwrap())
    }

    #[test]
    fn clean_description() {
        assert!(diags("move(e) causes pos(X,Y+1) if pos(X,Y).\ninertial pos.\ndefault ~lit.\n").is_empty());
    }

    #[test]
    fn unsafe_variable() {
        let d = diags("move(e) causes pos(X,Z) if pos(X,Y).");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UnsafeVariable);
        assert!(d[0].message.contains("unsafe variable"));
        assert_eq!(d[0].pos.unwrap().line, 9);
    }

    #[test]
    fn duplicate_default_for_same_ground_atom() {
        let d = diags("default ~lit.\ndefault ~lit.\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::DuplicateDefault);

        let d = diags("default mark(R).\ndefault ~mark(2).\n");
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn constant_outside_sort() {
        let d = diags("nonexecutable move(e) if pos(4,1).");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::ValueOutOfSort);
    }

    #[test]
    fn programmatic_description_without_positions() {
        let mut desc = parse_action_description(DECLS).unwrap();
        desc.laws.push(CausalLaw::Inertial { fluent: "ghost".into() });
        let d = validate(&desc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UndeclaredSymbol);
        assert!(d[0].pos.is_none());
    }

    #[test]
    fn empty_and_duplicate_sorts() {
        let d = validate(&parse_action_description("sort a = 3..1.\nsort b = {x, x}.\n").unwrap());
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|x| x.kind == DiagnosticKind::InvalidSort));
    }
}
