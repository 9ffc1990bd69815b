//! Recursive-descent parser for the line-oriented domain syntax.
//!
//! Parsing runs in two passes: statements are read into a raw form first, then
//! atoms are resolved against the declarations (which may appear anywhere in
//! the file). Resolution is what turns `pos(9,8)` into `pos = (9,8)` for a
//! tuple-valued fluent, or `~dooropen` into `dooropen = false`.

use super::ast::*;
use super::diagnostics::{Diagnostic, DiagnosticKind};
use super::lexer::{tokenize, Tok, Token};

const KEYWORDS: &[&str] = &[
    "sort",
    "fluent",
    "action",
    "inertial",
    "default",
    "nonexecutable",
    "causes",
    "if",
    "true",
    "false",
    "boolean",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone)]
struct RawAtom {
    negated: bool,
    name: String,
    args: Vec<Term>,
    value: Option<Term>,
    pos: Pos,
}

#[derive(Debug, Clone)]
struct RawAction {
    name: String,
    args: Vec<Term>,
    pos: Pos,
}

#[derive(Debug)]
enum RawLaw {
    Static(RawAtom, Vec<RawAtom>),
    Dynamic(RawAction, RawAtom, Vec<RawAtom>),
    Nonexecutable(RawAction, Vec<RawAtom>),
    Inertial(String, Pos),
    Default(RawAtom),
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> Diagnostic {
        Diagnostic::new(
            DiagnosticKind::Syntax,
            format!("expected {}, found {}", what, self.peek().describe()),
            Some(self.pos()),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected(what)),
        }
    }

    /// Skips past the next `.` so parsing can resume after an error.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Dot => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn signed_int(&mut self) -> Option<i64> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Some(i)
            }
            Tok::Minus => {
                if let Tok::Int(i) = self.peek_at(1).clone() {
                    self.bump();
                    self.bump();
                    Some(-i)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn constant(&mut self) -> PResult<Value> {
        if let Some(i) = self.signed_int() {
            return Ok(Value::Int(i));
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Value::Sym(s))
            }
            _ => Err(self.expected("a constant")),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                let sign = match self.peek() {
                    Tok::Plus => 1,
                    Tok::Minus => -1,
                    _ => return Ok(Term::Var(v)),
                };
                self.bump();
                match self.peek().clone() {
                    Tok::Int(k) => {
                        self.bump();
                        Ok(Term::Offset(v, sign * k))
                    }
                    _ => Err(self.expected("an integer offset")),
                }
            }
            Tok::LParen => {
                self.bump();
                let items = self.term_list()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::Tuple(items))
            }
            _ => self.constant().map(Term::Const),
        }
    }

    fn term_list(&mut self) -> PResult<Vec<Term>> {
        let mut items = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.term()?);
        }
        Ok(items)
    }

    fn opt_args(&mut self) -> PResult<Vec<Term>> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let args = self.term_list()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(args)
        } else {
            Ok(Vec::new())
        }
    }

    fn sort_list(&mut self) -> PResult<Vec<String>> {
        if *self.peek() != Tok::LParen {
            return Ok(Vec::new());
        }
        self.bump();
        let mut sorts = vec![self.sort_name()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            sorts.push(self.sort_name()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(sorts)
    }

    fn sort_name(&mut self) -> PResult<String> {
        if self.is_kw(BOOLEAN_SORT) {
            self.bump();
            return Ok(BOOLEAN_SORT.to_string());
        }
        self.ident("a sort name")
    }

    fn atom(&mut self) -> PResult<RawAtom> {
        let pos = self.pos();
        let negated = if *self.peek() == Tok::Tilde {
            self.bump();
            true
        } else {
            false
        };
        let name = self.ident("a fluent name")?;
        let args = self.opt_args()?;
        let value = if !negated && *self.peek() == Tok::Eq {
            self.bump();
            Some(self.term()?)
        } else {
            None
        };
        Ok(RawAtom {
            negated,
            name,
            args,
            value,
            pos,
        })
    }

    fn body(&mut self) -> PResult<Vec<RawAtom>> {
        if !self.is_kw("if") {
            return Ok(Vec::new());
        }
        self.bump();
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn action_term(&mut self) -> PResult<RawAction> {
        let pos = self.pos();
        let name = self.ident("an action name")?;
        let args = self.opt_args()?;
        Ok(RawAction { name, args, pos })
    }

    fn sort_decl(&mut self) -> PResult<SortDecl> {
        self.bump();
        let name = self.ident("a sort name")?;
        self.expect(Tok::Eq, "`=`")?;
        let def = if *self.peek() == Tok::LBrace {
            self.bump();
            let mut values = vec![self.constant()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                values.push(self.constant()?);
            }
            self.expect(Tok::RBrace, "`}`")?;
            SortDef::Enum(values)
        } else if let Some(lo) = self.signed_int() {
            self.expect(Tok::DotDot, "`..`")?;
            let hi = self
                .signed_int()
                .ok_or_else(|| self.expected("an integer upper bound"))?;
            SortDef::Range(lo, hi)
        } else {
            let mut parts = vec![self.sort_name()?];
            while *self.peek() == Tok::Star {
                self.bump();
                parts.push(self.sort_name()?);
            }
            if parts.len() < 2 {
                return Err(self.expected("`*`"));
            }
            SortDef::Product(parts)
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(SortDecl { name, def })
    }

    fn fluent_decl(&mut self) -> PResult<FluentDecl> {
        self.bump();
        let name = self.ident("a fluent name")?;
        let arg_sorts = self.sort_list()?;
        let value_sort = if *self.peek() == Tok::Colon {
            self.bump();
            self.sort_name()?
        } else {
            BOOLEAN_SORT.to_string()
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(FluentDecl {
            name,
            arg_sorts,
            value_sort,
        })
    }

    fn action_decl(&mut self) -> PResult<ActionDecl> {
        self.bump();
        let name = self.ident("an action name")?;
        let arg_sorts = self.sort_list()?;
        self.expect(Tok::Dot, "`.`")?;
        Ok(ActionDecl { name, arg_sorts })
    }

    fn law(&mut self) -> PResult<RawLaw> {
        if self.is_kw("inertial") {
            self.bump();
            let pos = self.pos();
            let name = self.ident("a fluent name")?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(RawLaw::Inertial(name, pos));
        }
        if self.is_kw("default") {
            self.bump();
            let head = self.atom()?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(RawLaw::Default(head));
        }
        if self.is_kw("nonexecutable") {
            self.bump();
            let action = self.action_term()?;
            let body = self.body()?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(RawLaw::Nonexecutable(action, body));
        }
        if *self.peek() == Tok::Tilde {
            let head = self.atom()?;
            let body = self.body()?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(RawLaw::Static(head, body));
        }
        // Either `a causes A if ...` or a static law `A if ...`.
        let pos = self.pos();
        let name = self.ident("a law")?;
        let args = self.opt_args()?;
        if self.is_kw("causes") {
            self.bump();
            let head = self.atom()?;
            let body = self.body()?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(RawLaw::Dynamic(RawAction { name, args, pos }, head, body));
        }
        let value = if *self.peek() == Tok::Eq {
            self.bump();
            Some(self.term()?)
        } else {
            None
        };
        let head = RawAtom {
            negated: false,
            name,
            args,
            value,
            pos,
        };
        let body = self.body()?;
        self.expect(Tok::Dot, "`.`")?;
        Ok(RawLaw::Static(head, body))
    }
}

/// Parses a complete domain file.
///
/// On failure every diagnostic found is returned, each with a position inside
/// the input.
pub fn parse_action_description(text: &str) -> Result<ActionDescription, Vec<Diagnostic>> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, at: 0 };
    let mut desc = ActionDescription::default();
    let mut raw_laws = Vec::new();
    let mut errors = Vec::new();

    while *p.peek() != Tok::Eof {
        let pos = p.pos();
        let outcome = if p.is_kw("sort") {
            p.sort_decl().map(|d| {
                desc.sorts.push(d);
                desc.spans.sorts.push(pos);
            })
        } else if p.is_kw("fluent") {
            p.fluent_decl().map(|d| {
                desc.fluents.push(d);
                desc.spans.fluents.push(pos);
            })
        } else if p.is_kw("action") {
            p.action_decl().map(|d| {
                desc.actions.push(d);
                desc.spans.actions.push(pos);
            })
        } else {
            p.law().map(|l| raw_laws.push((l, pos)))
        };
        if let Err(e) = outcome {
            errors.push(e);
            p.recover();
        }
    }

    let resolver = Resolver { desc: &desc };
    let mut laws = Vec::new();
    let mut positions = Vec::new();
    for (raw, pos) in raw_laws {
        match resolver.law(raw) {
            Ok(law) => {
                laws.push(law);
                positions.push(pos);
            }
            Err(mut es) => errors.append(&mut es),
        }
    }
    desc.laws = laws;
    desc.spans.laws = positions;

    if errors.is_empty() {
        Ok(desc)
    } else {
        errors.sort_by_key(|d| d.pos.map(|p| p.offset).unwrap_or(0));
        Err(errors)
    }
}

/// Parses a comma-separated list of ground atoms such as
/// `pos(9,8), ~dooractive, ~dooropen` against an existing description.
pub fn parse_atoms(text: &str, desc: &ActionDescription) -> Result<Vec<FluentAtom>, Vec<Diagnostic>> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, at: 0 };
    let mut raw = Vec::new();
    if *p.peek() != Tok::Eof {
        loop {
            raw.push(p.atom().map_err(|e| vec![e])?);
            match p.peek() {
                Tok::Comma => {
                    p.bump();
                }
                Tok::Eof => break,
                _ => return Err(vec![p.expected("`,` or end of input")]),
            }
        }
    }
    let resolver = Resolver { desc };
    let mut errors = Vec::new();
    let mut atoms = Vec::new();
    for r in raw {
        let pos = r.pos;
        match resolver.atom(r) {
            Ok(a) if a.args.iter().all(Term::is_ground) && a.value.is_ground() => atoms.push(a),
            Ok(_) => errors.push(Diagnostic::new(
                DiagnosticKind::Syntax,
                "expected a ground atom",
                Some(pos),
            )),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(atoms)
    } else {
        Err(errors)
    }
}

struct Resolver<'a> {
    desc: &'a ActionDescription,
}

impl Resolver<'_> {
    fn atom(&self, raw: RawAtom) -> Result<FluentAtom, Diagnostic> {
        let decl = self.desc.fluent(&raw.name).ok_or_else(|| {
            Diagnostic::new(
                DiagnosticKind::UndeclaredSymbol,
                format!("undeclared fluent `{}`", raw.name),
                Some(raw.pos),
            )
        })?;
        let arity = decl.arg_sorts.len();
        let mismatch = |expected: usize| {
            Diagnostic::new(
                DiagnosticKind::ArityMismatch,
                format!(
                    "fluent `{}` expects {} argument(s), found {}",
                    raw.name,
                    expected,
                    raw.args.len()
                ),
                Some(raw.pos),
            )
        };
        if raw.negated {
            if !decl.is_boolean() {
                return Err(Diagnostic::new(
                    DiagnosticKind::InvalidLaw,
                    format!("`~` applied to non-boolean fluent `{}`", raw.name),
                    Some(raw.pos),
                ));
            }
            if raw.args.len() != arity {
                return Err(mismatch(arity));
            }
            return Ok(FluentAtom {
                fluent: raw.name,
                args: raw.args,
                value: Term::Const(Value::Bool(false)),
            });
        }
        if let Some(value) = raw.value {
            if raw.args.len() != arity {
                return Err(mismatch(arity));
            }
            return Ok(FluentAtom {
                fluent: raw.name,
                args: raw.args,
                value,
            });
        }
        if decl.is_boolean() {
            if raw.args.len() != arity {
                return Err(mismatch(arity));
            }
            return Ok(FluentAtom {
                fluent: raw.name,
                args: raw.args,
                value: Term::Const(Value::Bool(true)),
            });
        }
        // Shorthand for tuple-valued fluents: trailing arguments are the value.
        if let Some(parts) = self.desc.product_parts(&decl.value_sort) {
            let width = parts.len();
            if raw.args.len() == arity + width {
                let mut args = raw.args;
                let value = Term::Tuple(args.split_off(arity));
                return Ok(FluentAtom {
                    fluent: raw.name,
                    args,
                    value,
                });
            }
            return Err(mismatch(arity + width));
        }
        Err(Diagnostic::new(
            DiagnosticKind::InvalidLaw,
            format!("fluent `{}` needs an explicit `= value`", raw.name),
            Some(raw.pos),
        ))
    }

    fn action(&self, raw: RawAction) -> Result<ActionTerm, Diagnostic> {
        let decl = self.desc.action(&raw.name).ok_or_else(|| {
            Diagnostic::new(
                DiagnosticKind::UndeclaredSymbol,
                format!("undeclared action `{}`", raw.name),
                Some(raw.pos),
            )
        })?;
        if decl.arg_sorts.len() != raw.args.len() {
            return Err(Diagnostic::new(
                DiagnosticKind::ArityMismatch,
                format!(
                    "action `{}` expects {} argument(s), found {}",
                    raw.name,
                    decl.arg_sorts.len(),
                    raw.args.len()
                ),
                Some(raw.pos),
            ));
        }
        Ok(ActionTerm {
            name: raw.name,
            args: raw.args,
        })
    }

    fn atoms(&self, raw: Vec<RawAtom>, errors: &mut Vec<Diagnostic>) -> Vec<FluentAtom> {
        raw.into_iter()
            .filter_map(|a| self.atom(a).map_err(|e| errors.push(e)).ok())
            .collect()
    }

    fn law(&self, raw: RawLaw) -> Result<CausalLaw, Vec<Diagnostic>> {
        let mut errors = Vec::new();
        let law = match raw {
            RawLaw::Static(head, body) => {
                let head = self.atom(head).map_err(|e| errors.push(e)).ok();
                let body = self.atoms(body, &mut errors);
                head.map(|head| CausalLaw::Static { head, body })
            }
            RawLaw::Dynamic(action, head, body) => {
                let action = self.action(action).map_err(|e| errors.push(e)).ok();
                let head = self.atom(head).map_err(|e| errors.push(e)).ok();
                let body = self.atoms(body, &mut errors);
                match (action, head) {
                    (Some(action), Some(head)) => Some(CausalLaw::Dynamic { action, head, body }),
                    _ => None,
                }
            }
            RawLaw::Nonexecutable(action, body) => {
                let action = self.action(action).map_err(|e| errors.push(e)).ok();
                let body = self.atoms(body, &mut errors);
                action.map(|action| CausalLaw::Nonexecutable { action, body })
            }
            RawLaw::Inertial(fluent, pos) => {
                if self.desc.fluent(&fluent).is_none() {
                    errors.push(Diagnostic::new(
                        DiagnosticKind::UndeclaredSymbol,
                        format!("undeclared fluent `{}`", fluent),
                        Some(pos),
                    ));
                    None
                } else {
                    Some(CausalLaw::Inertial { fluent })
                }
            }
            RawLaw::Default(head) => {
                let head = self.atom(head).map_err(|e| errors.push(e)).ok();
                head.map(|head| CausalLaw::Default { head })
            }
        };
        match law {
            Some(l) if errors.is_empty() => Ok(l),
            _ => Err(errors),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECLS: &str = "sort row = 1..20.\nsort col = 1..20.\nsort cell = row * col.\n\
        sort dir = {e, s, w, n}.\nfluent pos : cell.\nfluent dooropen.\naction move(dir).\n";

    fn parse(laws: &str) -> ActionDescription {
        parse_action_description(&format!("{}{}", DECLS, laws)).unwrap()
    }

    #[test]
    fn dynamic_law_with_offset() {
        let d = parse("move(e) causes pos(X,Y+1) if pos(X,Y).");
        assert_eq!(
            d.laws[0],
            CausalLaw::Dynamic {
                action: ActionTerm {
                    name: "move".into(),
                    args: vec![Term::sym("e")]
                },
                head: FluentAtom {
                    fluent: "pos".into(),
                    args: vec![],
                    value: Term::Tuple(vec![Term::var("X"), Term::Offset("Y".into(), 1)]),
                },
                body: vec![FluentAtom {
                    fluent: "pos".into(),
                    args: vec![],
                    value: Term::Tuple(vec![Term::var("X"), Term::var("Y")]),
                }],
            }
        );
    }

    #[test]
    fn inertial_law() {
        let d = parse("inertial dooropen.");
        assert_eq!(
            d.laws,
            vec![CausalLaw::Inertial {
                fluent: "dooropen".into()
            }]
        );
    }

    #[test]
    fn declarations_only_yield_no_laws() {
        let d = parse_action_description(DECLS).unwrap();
        assert!(d.laws.is_empty());
        assert_eq!(d.sorts.len(), 4);
        let empty = parse_action_description("").unwrap();
        assert!(empty.laws.is_empty());
    }

    #[test]
    fn negation_and_explicit_value_agree() {
        let a = parse("nonexecutable move(e) if pos(9,9), ~dooropen.");
        let b = parse("nonexecutable move(e) if pos = (9,9), dooropen = false.");
        assert_eq!(a, b);
    }

    #[test]
    fn syntax_error_has_position_and_expectation() {
        let src = format!("{}move(e) causes pos(X,Y+1) if pos(X,Y)\n", DECLS);
        let errs = parse_action_description(&src).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, DiagnosticKind::Syntax);
        assert!(errs[0].message.contains("expected `.`"));
        assert!(errs[0].pos.unwrap().offset <= src.len());
    }

    #[test]
    fn undeclared_and_arity_errors() {
        let src = format!("{}jump causes pos(1,1).\nmove causes pos(1,1).\n", DECLS);
        let errs = parse_action_description(&src).unwrap_err();
        let kinds: Vec<_> = errs.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![DiagnosticKind::UndeclaredSymbol, DiagnosticKind::ArityMismatch]
        );
        assert_eq!(errs[0].pos.unwrap().line, 8);
        assert_eq!(errs[1].pos.unwrap().line, 9);
    }

    #[test]
    fn recovery_reports_every_bad_statement() {
        let src = "sort a = .\nsort b = {x}.\nfluent f(.\n";
        let errs = parse_action_description(src).unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn ground_atom_list() {
        let d = parse_action_description(DECLS).unwrap();
        let atoms = parse_atoms("pos(9,8), ~dooropen", &d).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[1], FluentAtom::boolean("dooropen", vec![], false));
        assert!(parse_atoms("pos(X,8)", &d).is_err());
    }
}
