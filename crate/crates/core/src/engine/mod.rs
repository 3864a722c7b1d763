//! Backtracking solver over procedure tables.
//!
//! Determinism contracts are checked at run time: a det procedure that fails,
//! or a det/semidet procedure with two distinct solutions, raises
//! `determinism_error(Proc, Det, no_solution | multiple_solutions)`.

mod bindings;
mod builtins;
mod solve;

use std::fmt;

use thiserror::Error;

pub use bindings::{unify, Bindings};
pub use builtins::{eval_arith, eval_builtin};
pub use solve::{Engine, Flow, DEFAULT_MAX_DEPTH};

use crate::lang::{Goal, Term};
use crate::modes::ProcTable;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExceptionPolicy {
    /// Exceptions become an `Exception` outcome.
    #[default]
    CatchAll,
    /// Exceptions escape as `EngineError::Uncaught`; callers abort on it.
    Propagate,
}

/// Why execution stopped unwinding the stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unwind {
    Throw(Term),
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("uncaught exception: {0}")]
    Uncaught(Term),
    #[error("internal error: {0}")]
    Internal(String),
}

/// One answer: the query's variables that are bound, in first-occurrence order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    pub bindings: Vec<(String, Term)>,
}

impl Solution {
    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.iter().find(|(v, _)| v == var).map(|(_, t)| t)
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bindings.iter().map(|(v, t)| format!("{} = {}", v, t)).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineOutcome {
    Solutions(Vec<Solution>),
    Exception(Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogEvent {
    Label(u32),
    Batch(Vec<u32>),
}

impl fmt::Display for LogEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEvent::Label(l) => write!(f, "L {}", l),
            LogEvent::Batch(ls) => {
                let ids: Vec<String> = ls.iter().map(u32::to_string).collect();
                write!(f, "B {}", ids.join(","))
            }
        }
    }
}

pub trait EventSink {
    fn event(&mut self, e: LogEvent);
}

impl EventSink for Vec<LogEvent> {
    fn event(&mut self, e: LogEvent) {
        self.push(e);
    }
}

/// Solves `query` against `table`; see [`Engine`] for finer control.
pub fn solve(
    query: &Goal,
    table: &ProcTable,
    limit: Option<usize>,
    policy: ExceptionPolicy,
    sink: Option<&mut dyn EventSink>,
) -> Result<EngineOutcome, EngineError> {
    let engine = Engine::new(table).with_policy(policy);
    match sink {
        Some(s) => engine.with_sink(s).solve(query, limit),
        None => engine.solve(query, limit),
    }
}

/// Runs `f` on a thread with a large stack; deep recursion in solved
/// programs turns into deep native recursion.
pub fn with_large_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(s, f)
            .expect("spawn solver thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}
