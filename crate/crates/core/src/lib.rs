//! Unit testing and coverage toolkit for a small Mercury-like logic language.
//!
//! The pipeline: [`lang`] reads programs, [`modes`] normalizes and splits
//! them into single-mode procedures, [`engine`] runs them, [`testkit`]
//! evaluates test suites and [`coverage`] instruments procedures with
//! counters and turns execution logs into reports.

pub mod coverage;
pub mod engine;
pub mod lang;
pub mod modes;
pub mod testkit;
