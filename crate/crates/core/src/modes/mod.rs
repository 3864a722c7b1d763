//! Mode analysis: superhomogeneous normalization, mode-directed reordering,
//! splitting of multi-moded predicates into procedures, determinism checks.

mod determinism;
mod normalize;
mod procedure;
mod schedule;

use thiserror::Error;

pub use determinism::{check_determinism, Diagnostic};
pub use normalize::{is_superhomogeneous, normalize_clause, normalize_goal, to_superhomogeneous, FreshVars};
pub use procedure::{proc_name, Origin, ProcClause, ProcTable, Procedure, RenameEntry, RenamingTable};
pub use schedule::{analyze, by_origin, compile_query, compile_query_in, reorder_and_split, Bound, ModeEnv, Scheduler};

use crate::lang::{PredKey, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModeError {
    #[error("mode error in {proc} at {span}: no ordering makes `{goal}` executable")]
    Unschedulable { proc: String, goal: String, span: Span },
    #[error("mode error in {proc} at {span}: output variable {var} is not bound")]
    OutputUnbound { proc: String, var: String, span: Span },
    #[error("no mode declaration for {0}")]
    NoModes(PredKey),
    #[error("ambiguous call to {pred}: candidates {}", candidates.join(", "))]
    Ambiguous { pred: PredKey, candidates: Vec<String> },
    #[error("{0} is not in procedure form (one mode, distinct head variables)")]
    NotProcedural(PredKey),
    #[error("renaming file line {line}: {message}")]
    RenamingFile { line: usize, message: String },
}
