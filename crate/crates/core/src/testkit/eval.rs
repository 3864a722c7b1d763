use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::suite::{Assertion, Cardinality, Expectation, TestCase};
use super::types::{compatible, conforms, rename_apart, well_formed};
use super::TestkitError;
use crate::engine::{Bindings, Engine, EngineError, EngineOutcome, EventSink, ExceptionPolicy, Solution, Unwind};
use crate::lang::{goal_to_string, Determinism, Goal, GoalKind, Term};
use crate::modes::{compile_query, Bound, ModeEnv, ProcTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    /// Any determinism; `print/1` is not allowed.
    #[default]
    Multi,
    /// Only det goals; `print/1` writes to the output.
    Io,
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Multi => "multi",
            ExecMode::Io => "io",
        })
    }
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multi" => Ok(ExecMode::Multi),
            "io" => Ok(ExecMode::Io),
            _ => Err(format!("unknown execution mode `{}`", s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestStatus {
    Succeeded,
    ConditionFailed,
    FailedFailure,
    FailedException,
    FailedUnexpectedSuccess,
}

impl fmt::Display for TestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestStatus::Succeeded => "succeeded",
            TestStatus::ConditionFailed => "condition_failed",
            TestStatus::FailedFailure => "failed_failure",
            TestStatus::FailedException => "failed_exception",
            TestStatus::FailedUnexpectedSuccess => "failed_unexpected_success",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestOutcome {
    pub name: String,
    pub status: TestStatus,
    pub detail: String,
}

impl TestOutcome {
    fn new(case: &TestCase, status: TestStatus, detail: impl Into<String>) -> TestOutcome {
        TestOutcome {
            name: case.name.clone(),
            status,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == TestStatus::Succeeded
    }
}

/// Whether `print/1` is reachable from `goals` through the procedures of `table`.
fn calls_print(goals: &[&Goal], table: &ProcTable) -> bool {
    let mut stack: Vec<Goal> = goals.iter().map(|g| (*g).clone()).collect();
    let mut seen = BTreeSet::new();
    while let Some(g) = stack.pop() {
        let mut found = false;
        g.walk(&mut |s| {
            if let GoalKind::Call(name, args) = &s.kind {
                if name == "print" && args.len() == 1 {
                    found = true;
                } else if let Some(p) = table.get(name) {
                    if seen.insert(name.clone()) {
                        stack.extend(p.clauses.iter().map(|c| c.body.clone()));
                    }
                }
            }
        });
        if found {
            return true;
        }
    }
    false
}

/// The first goal of a compiled query that is not det.
fn first_nondet(goals: &[Goal], table: &ProcTable) -> Option<Goal> {
    let env = ModeEnv::from_table(table);
    let mut bound = Bound::new();
    for g in goals {
        let det = match &g.kind {
            GoalKind::Unify(a, b) => {
                let free = |t: &Term| t.as_var().is_some_and(|v| !bound.contains(v));
                free(a) || free(b)
            }
            GoalKind::Call(name, args) => match table.get(name) {
                Some(p) => p.determinism == Determinism::Det,
                None => env
                    .select(name, args, &bound)
                    .ok()
                    .flatten()
                    .is_some_and(|(m, _)| m.determinism == Determinism::Det),
            },
            _ => g.is_true(),
        };
        if !det {
            return Some(g.clone());
        }
        bound.extend(g.vars());
    }
    None
}

/// Compiles the code of a test case and checks it against the execution mode.
pub fn prepare(case: &TestCase, table: &ProcTable, mode: ExecMode) -> Result<Goal, TestkitError> {
    let code = compile_query(&case.code_goal(), table, &Bound::new()).map_err(|e| TestkitError::Mode {
        test: case.name.clone(),
        source: e,
    })?;
    let conds: Vec<&Goal> = case
        .assertions
        .iter()
        .filter_map(|a| match a {
            Assertion::True(c) | Assertion::SomeTrue(c) | Assertion::AllTrue(c) | Assertion::TrueNth(_, c) => Some(c),
            _ => None,
        })
        .collect();
    match mode {
        ExecMode::Io => {
            if let Some(g) = first_nondet(code.conjuncts(), table) {
                return Err(TestkitError::ExecMode {
                    test: case.name.clone(),
                    message: format!("io mode requires det goals, `{}` is not", goal_to_string(&g, 0)),
                });
            }
        }
        ExecMode::Multi => {
            if calls_print(&[&[&code][..], &conds[..]].concat(), table) {
                return Err(TestkitError::ExecMode {
                    test: case.name.clone(),
                    message: "print/1 is only available in io mode".into(),
                });
            }
        }
    }
    for a in &case.assertions {
        if let Assertion::Type(_, t) = a {
            well_formed(t, &table.type_defs).map_err(|m| TestkitError::ExecMode {
                test: case.name.clone(),
                message: m,
            })?;
        }
    }
    Ok(code)
}

/// Runs every pre-execution check of a suite.
pub fn check_suite(cases: &[TestCase], table: &ProcTable, mode: ExecMode) -> Result<(), TestkitError> {
    cases.iter().try_for_each(|c| prepare(c, table, mode).map(|_| ()))
}

enum Check {
    Holds,
    Fails(String),
    Threw(Term),
}

/// Evaluates test cases against one procedure table.
pub struct Runner<'a> {
    pub table: &'a ProcTable,
    pub mode: ExecMode,
    pub policy: ExceptionPolicy,
}

impl<'a> Runner<'a> {
    pub fn new(table: &'a ProcTable, mode: ExecMode, policy: ExceptionPolicy) -> Runner<'a> {
        Runner { table, mode, policy }
    }

    fn uncaught(&self, case: &TestCase, e: EngineError) -> TestkitError {
        match e {
            EngineError::Uncaught(t) => TestkitError::Uncaught {
                test: case.name.clone(),
                term: t,
            },
            EngineError::Internal(m) => TestkitError::Internal(m),
        }
    }

    /// Whether `cond` has a solution with `known` bound.
    fn cond(&self, case: &TestCase, cond: &Goal, known: &[(String, Term)]) -> Result<Check, TestkitError> {
        let bound: Bound = known.iter().map(|(v, _)| v.clone()).collect();
        let compiled = compile_query(cond, self.table, &bound).map_err(|e| TestkitError::Mode {
            test: case.name.clone(),
            source: e,
        })?;
        let mut b = Bindings::new();
        for (v, t) in known {
            b.bind(v.clone(), t.clone());
        }
        match Engine::new(self.table)
            .with_policy(self.policy)
            .solve_from(&compiled, &b, Some(1))
        {
            Ok(sols) if sols.is_empty() => Ok(Check::Fails(String::new())),
            Ok(_) => Ok(Check::Holds),
            Err(Unwind::Throw(t)) => match self.policy {
                ExceptionPolicy::CatchAll => Ok(Check::Threw(t)),
                ExceptionPolicy::Propagate => Err(TestkitError::Uncaught {
                    test: case.name.clone(),
                    term: t,
                }),
            },
            Err(Unwind::Internal(m)) => Err(TestkitError::Internal(m)),
        }
    }

    fn check(
        &self,
        case: &TestCase,
        code: &Goal,
        a: &Assertion,
        sols: &[Vec<(String, Term)>],
        extra: &mut Vec<(String, Term)>,
    ) -> Result<Check, TestkitError> {
        let with = |s: &Vec<(String, Term)>| -> Vec<(String, Term)> { s.iter().chain(extra.iter()).cloned().collect() };
        Ok(match a {
            Assertion::Expect(_) | Assertion::Limit(_) => Check::Holds,
            Assertion::True(c) => self.cond(case, c, &with(&sols[0]))?,
            Assertion::TrueNth(n, c) => match sols.get(n - 1) {
                Some(s) => self.cond(case, c, &with(s))?,
                None => Check::Fails(format!("only {} solution(s)", sols.len())),
            },
            Assertion::SomeTrue(c) => {
                for s in sols {
                    match self.cond(case, c, &with(s))? {
                        Check::Fails(_) => continue,
                        other => return Ok(other),
                    }
                }
                Check::Fails(String::new())
            }
            Assertion::AllTrue(c) => {
                for (i, s) in sols.iter().enumerate() {
                    match self.cond(case, c, &with(s))? {
                        Check::Holds => continue,
                        Check::Fails(_) => return Ok(Check::Fails(format!("not for solution {}", i + 1))),
                        t => return Ok(t),
                    }
                }
                Check::Holds
            }
            Assertion::Cardinality(Cardinality::Count(n)) => {
                if *n == sols.len() {
                    Check::Holds
                } else {
                    Check::Fails(format!("{} solution(s)", sols.len()))
                }
            }
            Assertion::Cardinality(Cardinality::Var(v)) => {
                let count = Term::Int(sols.len() as i64);
                let prior = sols[0]
                    .iter()
                    .chain(extra.iter())
                    .find(|(w, _)| w == v)
                    .map(|(_, t)| t.clone());
                match prior {
                    Some(t) if t != count => Check::Fails(format!("{} solution(s)", sols.len())),
                    Some(_) => Check::Holds,
                    None => {
                        extra.push((v.clone(), count));
                        Check::Holds
                    }
                }
            }
            Assertion::Type(v, t) => {
                for g in code.conjuncts() {
                    let GoalKind::Call(name, args) = &g.kind else { continue };
                    let Some(sig) = self.table.get(name).and_then(|p| p.type_sig.as_ref()) else {
                        continue;
                    };
                    for (arg, decl) in args.iter().zip(sig) {
                        if arg.as_var() == Some(v.as_str()) && !compatible(t, &rename_apart(decl)) {
                            return Ok(Check::Fails(format!("{} is used as an argument of {}", v, name)));
                        }
                    }
                }
                for s in sols {
                    if let Some((_, val)) = s.iter().find(|(w, _)| w == v) {
                        if !conforms(val, t, &self.table.type_defs) {
                            return Ok(Check::Fails(format!("{} = {}", v, val)));
                        }
                    }
                }
                Check::Holds
            }
        })
    }

    /// Runs one test case. `sink` receives coverage events of the code;
    /// `output` receives what `print/1` writes.
    pub fn run_case(
        &self,
        case: &TestCase,
        sink: Option<&mut dyn EventSink>,
        output: Option<&mut dyn Write>,
    ) -> Result<TestOutcome, TestkitError> {
        let code = prepare(case, self.table, self.mode)?;
        let mut engine = Engine::new(self.table).with_policy(self.policy);
        if let Some(s) = sink {
            engine = engine.with_sink(s);
        }
        if let Some(o) = output {
            engine = engine.with_output(o);
        }
        let outcome = engine
            .solve_reporting(&code, &case.code_vars(), case.limit())
            .map_err(|e| self.uncaught(case, e))?;

        let expected = case.expectation();
        let sols = match outcome {
            EngineOutcome::Exception(t) => {
                return Ok(if expected == Expectation::Exception {
                    TestOutcome::new(case, TestStatus::Succeeded, "threw an exception as expected")
                } else {
                    TestOutcome::new(
                        case,
                        TestStatus::FailedException,
                        format!("the test case threw an exception: {}", t),
                    )
                })
            }
            EngineOutcome::Solutions(s) => s,
        };
        if sols.is_empty() {
            return Ok(match expected {
                Expectation::Fail => TestOutcome::new(case, TestStatus::Succeeded, "failed as expected"),
                e => TestOutcome::new(
                    case,
                    TestStatus::FailedFailure,
                    format!(
                        "failed because of failure (instead of {})",
                        if e == Expectation::Succeed {
                            "success"
                        } else {
                            "exception"
                        }
                    ),
                ),
            });
        }
        if expected != Expectation::Succeed {
            return Ok(TestOutcome::new(
                case,
                TestStatus::FailedUnexpectedSuccess,
                format!(
                    "succeeded (instead of {})",
                    if expected == Expectation::Fail {
                        "failure"
                    } else {
                        "exception"
                    }
                ),
            ));
        }

        let sols: Vec<Vec<(String, Term)>> = sols.into_iter().map(|s: Solution| s.bindings).collect();
        let mut extra = Vec::new();
        for a in &case.assertions {
            match self.check(case, &code, a, &sols, &mut extra)? {
                Check::Holds => {}
                Check::Fails(why) => {
                    let mut detail = format!("condition {} failed", a);
                    if !why.is_empty() {
                        detail.push_str(": ");
                        detail.push_str(&why);
                    }
                    return Ok(TestOutcome::new(case, TestStatus::ConditionFailed, detail));
                }
                Check::Threw(t) => {
                    return Ok(TestOutcome::new(
                        case,
                        TestStatus::FailedException,
                        format!("the assertion {} threw an exception: {}", a, t),
                    ))
                }
            }
        }
        Ok(TestOutcome::new(case, TestStatus::Succeeded, "ok"))
    }

    pub fn run_suite(&self, cases: &[TestCase]) -> Result<Vec<TestOutcome>, TestkitError> {
        check_suite(cases, self.table, self.mode)?;
        cases.iter().map(|c| self.run_case(c, None, None)).collect()
    }
}

pub fn evaluate_testcase(
    case: &TestCase,
    table: &ProcTable,
    mode: ExecMode,
    policy: ExceptionPolicy,
) -> Result<TestOutcome, TestkitError> {
    Runner::new(table, mode, policy).run_case(case, None, None)
}

/// `name <TAB> status <TAB> detail` per case, then `passed/total passed`.
pub fn render_text_report(outcomes: &[TestOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!("{}\t{}\t{}\n", o.name, o.status, o.detail));
    }
    let passed = outcomes.iter().filter(|o| o.passed()).count();
    s.push_str(&format!("{}/{} passed\n", passed, outcomes.len()));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::modes::analyze;
    use crate::testkit::parse_testsuite;

    const LISTS: &str = "
:- mode append(in, in, out) is det.
:- mode append(out, out, in) is multi.
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
:- mode member(in, in) is semidet.
:- mode member(out, in) is nondet.
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
:- mode reverse(in, out) is det.
reverse(L, R) :- rev(L, [], R).
:- mode rev(in, in, out) is det.
rev([], A, A).
rev([H|T], A, R) :- rev(T, [H|A], R).
:- mode badrev(in, out) is det.
badrev(L, L).
:- mode shout(in) is det.
shout(X) :- print(X).
";

    fn run(suite: &str) -> Vec<TestOutcome> {
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        Runner::new(&table, ExecMode::Multi, ExceptionPolicy::CatchAll)
            .run_suite(&parse_testsuite(suite).unwrap())
            .unwrap()
    }

    fn status(suite: &str) -> TestStatus {
        run(suite)[0].status
    }

    #[test]
    fn reference_examples_succeed() {
        let out = run("
test(t1, [reverse([1,2],L)], [true(L=[2,1])]).
test(t2, [member(X,[1,3,4,2])], [limit(2),some_true(X>1)]).
test(t3, [member(X,[1,2,3,4])], [solutions_cardinality(N),true(N>3), all_true(X<5)]).
test(t4, [append(L1,L2,[1,2,3])], [type(L2,list(int)), some_true((L1=[1,2],length(L2,1)))]).
test(t5, [append(L1,L2,[1,2,3])], [some_true((L1=[1,2],L2=[3]))]).
");
        assert!(out.iter().all(TestOutcome::passed), "{:?}", out);
    }

    #[test]
    fn failures_are_classified() {
        assert_eq!(
            status("test(a, [badrev([1,2],L)], [true(L=[2,1])])."),
            TestStatus::ConditionFailed
        );
        let out = run("test(b, [member(5,[1,2])], []).");
        assert_eq!(out[0].status, TestStatus::FailedFailure);
        assert_eq!(out[0].detail, "failed because of failure (instead of success)");
        assert_eq!(status("test(c, [member(5,[1,2])], [fail])."), TestStatus::Succeeded);
        assert_eq!(
            status("test(d, [member(1,[1,2])], [fail])."),
            TestStatus::FailedUnexpectedSuccess
        );
        assert_eq!(
            status("test(e, [member(1,[1,2])], [exception])."),
            TestStatus::FailedUnexpectedSuccess
        );
        assert_eq!(status("test(f, [throw(e)], [])."), TestStatus::FailedException);
        assert_eq!(
            status("test(g, [throw(e)], [exception, true(1 > 2)])."),
            TestStatus::Succeeded
        );
        assert_eq!(status("test(h, [throw(e)], [fail])."), TestStatus::FailedException);
        assert_eq!(
            status("test(i, [member(X,[1])], [true(throw(oops))])."),
            TestStatus::FailedException
        );
    }

    #[test]
    fn solution_limits_and_counts() {
        // only the first solution is computed by default
        assert_eq!(
            status("test(a, [member(X,[1,2])], [true(X = 1)])."),
            TestStatus::Succeeded
        );
        assert_eq!(
            status("test(b, [member(X,[1,2])], [true(2, X = 2)])."),
            TestStatus::Succeeded
        );
        let out = run("test(c, [member(X,[1,2])], [true(3, X = 2)]).");
        assert_eq!(out[0].status, TestStatus::ConditionFailed);
        assert!(out[0].detail.ends_with("only 2 solution(s)"), "{}", out[0].detail);
        assert_eq!(
            status("test(d, [member(X,[1,2,3])], [limit(2), solutions_cardinality(2)])."),
            TestStatus::Succeeded
        );
        assert_eq!(
            status("test(e, [member(X,[1,2,3])], [solutions_cardinality(2)])."),
            TestStatus::ConditionFailed
        );
        assert_eq!(
            status("test(f, [member(X,[1,3,4,2])], [limit(1), some_true(X > 1)])."),
            TestStatus::ConditionFailed
        );
        assert_eq!(
            status("test(g, [member(X,[1,2])], [all_true(X < 2)])."),
            TestStatus::ConditionFailed
        );
    }

    #[test]
    fn type_assertions() {
        assert_eq!(
            status("test(a, [append(L1,L2,[1,2])], [type(L2,list(int))])."),
            TestStatus::Succeeded
        );
        assert_eq!(
            status("test(b, [member(X,[a,b])], [type(X,int)])."),
            TestStatus::ConditionFailed
        );
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        let cases = parse_testsuite("test(c, [member(X,[1])], [type(X,tree(int))]).").unwrap();
        assert!(check_suite(&cases, &table, ExecMode::Multi).is_err());
    }

    #[test]
    fn execution_modes() {
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        let io = parse_testsuite("test(a, [reverse([1],L), shout(L)], [true(L = [1])]).").unwrap();
        let err = check_suite(&io, &table, ExecMode::Multi).unwrap_err();
        assert!(err.to_string().contains("print/1"), "{}", err);
        let mut out: Vec<u8> = Vec::new();
        let r = Runner::new(&table, ExecMode::Io, ExceptionPolicy::CatchAll);
        assert!(r.run_case(&io[0], None, Some(&mut out)).unwrap().passed());
        assert_eq!(String::from_utf8(out).unwrap(), "[1]\n");
        let nondet = parse_testsuite("test(b, [member(X,[1,2])], []).").unwrap();
        assert!(check_suite(&nondet, &table, ExecMode::Io).is_err());
    }

    #[test]
    fn propagate_policy_escapes() {
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        let cases = parse_testsuite("test(f, [throw(e)], []).").unwrap();
        let err = evaluate_testcase(&cases[0], &table, ExecMode::Multi, ExceptionPolicy::Propagate).unwrap_err();
        assert_eq!(
            err,
            TestkitError::Uncaught {
                test: "f".into(),
                term: Term::atom("e")
            }
        );
    }

    #[test]
    fn text_report() {
        assert_eq!(render_text_report(&[]), "0/0 passed\n");
        let out = run("test(t1, [reverse([1,2],L)], [true(L=[2,1])]).\ntest(t2, [member(5,[1])], []).");
        assert_eq!(
            render_text_report(&out),
            "t1\tsucceeded\tok\nt2\tfailed_failure\tfailed because of failure (instead of success)\n1/2 passed\n"
        );
    }
}
