use std::fmt::Write;

use super::ast::*;

/// Canonical rendering: sorts, fluents and actions in declaration order, a
/// blank line, then one law per line.
pub fn pretty_print(desc: &ActionDescription) -> String {
    let mut out = String::new();
    for s in &desc.sorts {
        let _ = writeln!(out, "sort {} = {}.", s.name, sort_def(&s.def));
    }
    for f in &desc.fluents {
        out.push_str("fluent ");
        out.push_str(&f.name);
        push_sorts(&mut out, &f.arg_sorts);
        if !f.is_boolean() {
            out.push_str(" : ");
            out.push_str(&f.value_sort);
        }
        out.push_str(".\n");
    }
    for a in &desc.actions {
        out.push_str("action ");
        out.push_str(&a.name);
        push_sorts(&mut out, &a.arg_sorts);
        out.push_str(".\n");
    }
    if !desc.laws.is_empty() && !out.is_empty() {
        out.push('\n');
    }
    for law in &desc.laws {
        out.push_str(&law_to_string(desc, law));
        out.push('\n');
    }
    out
}

fn sort_def(def: &SortDef) -> String {
    match def {
        SortDef::Enum(values) => format!(
            "{{{}}}",
            values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
        ),
        SortDef::Range(lo, hi) => format!("{}..{}", lo, hi),
        SortDef::Product(parts) => parts.join(" * "),
    }
}

fn push_sorts(out: &mut String, sorts: &[String]) {
    if !sorts.is_empty() {
        out.push('(');
        out.push_str(&sorts.join(", "));
        out.push(')');
    }
}

pub fn law_to_string(desc: &ActionDescription, law: &CausalLaw) -> String {
    let body = |b: &[FluentAtom]| {
        if b.is_empty() {
            String::new()
        } else {
            format!(
                " if {}",
                b.iter()
                    .map(|a| atom_to_string(desc, a))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        }
    };
    match law {
        CausalLaw::Static { head, body: b } => format!("{}{}.", atom_to_string(desc, head), body(b)),
        CausalLaw::Dynamic {
            action,
            head,
            body: b,
        } => format!(
            "{} causes {}{}.",
            action_to_string(action),
            atom_to_string(desc, head),
            body(b)
        ),
        CausalLaw::Nonexecutable { action, body: b } => {
            format!("nonexecutable {}{}.", action_to_string(action), body(b))
        }
        CausalLaw::Inertial { fluent } => format!("inertial {}.", fluent),
        CausalLaw::Default { head } => format!("default {}.", atom_to_string(desc, head)),
    }
}

pub fn term_to_string(t: &Term) -> String {
    match t {
        Term::Const(v) => v.to_string(),
        Term::Var(v) => v.clone(),
        Term::Offset(v, k) if *k < 0 => format!("{}-{}", v, -k),
        Term::Offset(v, k) => format!("{}+{}", v, k),
        Term::Tuple(items) => format!("({})", terms(items)),
    }
}

fn terms(items: &[Term]) -> String {
    items.iter().map(term_to_string).collect::<Vec<_>>().join(",")
}

pub fn action_to_string(a: &ActionTerm) -> String {
    if a.args.is_empty() {
        a.name.clone()
    } else {
        format!("{}({})", a.name, terms(&a.args))
    }
}

/// Uses the `f` / `~f` shorthand for booleans and the trailing-argument
/// shorthand for tuple-valued fluents.
pub fn atom_to_string(desc: &ActionDescription, atom: &FluentAtom) -> String {
    let head = |args: &[Term]| {
        if args.is_empty() {
            atom.fluent.clone()
        } else {
            format!("{}({})", atom.fluent, terms(args))
        }
    };
    match &atom.value {
        Term::Const(Value::Bool(true)) => head(&atom.args),
        Term::Const(Value::Bool(false)) => format!("~{}", head(&atom.args)),
        Term::Tuple(items) => {
            let width = desc
                .fluent(&atom.fluent)
                .and_then(|f| desc.product_parts(&f.value_sort))
                .map(|p| p.len());
            if width == Some(items.len()) {
                let mut all = atom.args.clone();
                all.extend(items.iter().cloned());
                head(&all)
            } else {
                format!("{} = {}", head(&atom.args), term_to_string(&atom.value))
            }
        }
        v => format!("{} = {}", head(&atom.args), term_to_string(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_action_description;
    use super::*;

    #[test]
    fn single_law_is_byte_stable() {
        let src = "sort dir = {e, w}.\nfluent lit.\naction flip(dir).\n\nflip(e) causes ~lit if lit.\n";
        let d = parse_action_description(src).unwrap();
        let once = pretty_print(&d);
        let twice = pretty_print(&parse_action_description(&once).unwrap());
        assert_eq!(once, src);
        assert_eq!(once, twice);
        assert_eq!(d.laws.len(), 1);
    }

    #[test]
    fn offsets_render_with_sign() {
        assert_eq!(term_to_string(&Term::Offset("X".into(), -1)), "X-1");
        assert_eq!(term_to_string(&Term::Offset("Y".into(), 2)), "Y+2");
    }
}
