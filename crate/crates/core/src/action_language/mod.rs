//! Action descriptions: a line-oriented surface syntax for causal laws
//! (static, dynamic, nonexecutable, inertial, default), a parser with
//! positioned diagnostics, a validator and a canonical pretty printer.
//!
//! ```text
//! sort row = 1..20.
//! sort cell = row * col.
//! fluent pos : cell.
//! fluent dooropen.
//! action move(dir).
//! move(e) causes pos(X,Y+1) if pos(X,Y).
//! nonexecutable move(e) if pos(9,9), ~dooropen.
//! inertial dooropen.
//! ```

mod ast;
mod diagnostics;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use ast::*;
pub use diagnostics::{render, Diagnostic, DiagnosticKind};
pub use parser::{is_keyword, parse_action_description, parse_atoms};
pub use pretty::{action_to_string, atom_to_string, law_to_string, pretty_print, term_to_string};
pub use validate::{eval_term, validate, var_sorts};
