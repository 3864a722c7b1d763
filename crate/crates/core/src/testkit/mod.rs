//! Test suites: parsing, execution through the engine, assertion checking
//! and reporting.

mod eval;
mod renaming;
mod suite;
mod types;

use thiserror::Error;

pub use eval::{
    check_suite, evaluate_testcase, prepare, render_text_report, ExecMode, Runner, TestOutcome, TestStatus,
};
pub use renaming::apply_renaming;
pub use suite::{parse_testsuite, Assertion, Cardinality, Expectation, TestCase};
pub use types::{conforms, well_formed};

use crate::lang::{Pos, Term};
use crate::modes::ModeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestkitError {
    #[error("test suite {pos}: {message}")]
    Suite { pos: Pos, message: String },
    #[error("test {test}: {source}")]
    Mode { test: String, source: ModeError },
    #[error(transparent)]
    Modes(#[from] ModeError),
    #[error("renaming: {0}")]
    Renaming(String),
    #[error("test {test}: {message}")]
    ExecMode { test: String, message: String },
    #[error("test {test}: uncaught exception {term}")]
    Uncaught { test: String, term: Term },
    #[error("internal error: {0}")]
    Internal(String),
}
