//! Term, goal and program representation, with a reader and printer for the
//! Prolog-style concrete syntax.
//!
//! Lists use the fixed cons functor `'[|]'/2` and the atom `[]`.

mod ast;
mod lexer;
mod parser;
mod printer;
mod term;

use thiserror::Error;

pub use ast::*;
pub use parser::{parse_goal, parse_program, parse_term, read_terms, term_to_goal, SKind, STerm, ITE};
pub use printer::{atom_to_string, clause_to_string, goal_to_string, program_to_string, term_to_string};
pub use term::{Pos, Span, Symbol, Term, TypeExpr, CONS, NIL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate mode declaration for {0}")]
    DuplicateMode(PredKey),
    #[error("duplicate pred declaration for {0}")]
    DuplicatePred(PredKey),
    #[error("clause head arity mismatch: {key} but declared with arity {declared}")]
    ArityMismatch { key: PredKey, declared: usize },
    #[error("undefined predicate {0}")]
    UndefinedPredicate(PredKey),
}

/// Builtin predicates known to every program.
pub fn is_builtin(name: &str, arity: usize) -> bool {
    builtin_modes(name, arity).is_some()
}

/// Accepted instantiation patterns of a builtin, most instantiated first,
/// with the determinism of each.
pub fn builtin_modes(name: &str, arity: usize) -> Option<Vec<ModeDecl>> {
    use ArgMode::*;
    use Determinism::*;
    Some(match (name, arity) {
        ("true", 0) => vec![ModeDecl::new(vec![], Det)],
        ("fail", 0) => vec![ModeDecl::new(vec![], Semidet)],
        ("<" | ">" | "=<" | ">=" | "\\=" | "==", 2) => vec![ModeDecl::new(vec![In, In], Semidet)],
        ("is", 2) => vec![ModeDecl::new(vec![In, In], Semidet), ModeDecl::new(vec![Out, In], Det)],
        ("length", 2) => vec![ModeDecl::new(vec![In, In], Semidet), ModeDecl::new(vec![In, Out], Det)],
        ("throw", 1) => vec![ModeDecl::new(vec![In], Det)],
        ("print", 1) => vec![ModeDecl::new(vec![In], Det)],
        _ => return None,
    })
}
