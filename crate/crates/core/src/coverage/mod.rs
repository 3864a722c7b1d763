//! Coverage instrumentation: labelling, switch-aware batch logging, log
//! replay and reports.

mod instrument;
mod label;
mod meta;
mod report;
mod switch;

use thiserror::Error;

pub use instrument::{instrument, Instrumented};
pub use label::{
    clauses_proc_name, label_program, naive_instrument, LConj, LGoal, LGoalKind, LabelledClause, LabelledProcedure,
};
pub use meta::{ConstructKind, CounterMeta, MetaEntry};
pub use report::{
    classify, emit_detail_report, emit_html, parse_log, replay_events, replay_log, Counts, CoverageDegree,
    CoverageReport, ReportEntry, DETAIL_HEADER,
};
pub use switch::{detect_switch, BatchPlan, Branch, SwitchNode, SwitchShape, SwitchTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("meta file line {line}: {message}")]
    MetaFormat { line: usize, message: String },
    #[error("log file line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error("log refers to unknown label {0}")]
    UnknownLabel(u32),
    #[error("program is already instrumented")]
    AlreadyInstrumented,
    #[error("instrumented program fails the determinism check:\n{}", .0.join("\n"))]
    DeterminismRecheck(Vec<String>),
}
