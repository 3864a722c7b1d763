use std::cell::{Cell, RefCell};
use std::io::Write;

use super::bindings::{unify, Bindings};
use super::builtins::{error_term, eval_builtin};
use super::{EngineError, EngineOutcome, EventSink, ExceptionPolicy, LogEvent, Solution, Unwind};
use crate::lang::{is_builtin, ArgMode, Determinism, Goal, GoalKind, LogGoal, Term};
use crate::modes::{ProcTable, Procedure};

/// Default bound on nested procedure calls.
pub const DEFAULT_MAX_DEPTH: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

type Res = Result<Flow, Unwind>;
type Cont<'k> = &'k mut dyn FnMut(&Bindings) -> Res;

/// Depth-first, clause-order, left-to-right solver over a procedure table.
pub struct Engine<'a> {
    table: &'a ProcTable,
    policy: ExceptionPolicy,
    max_depth: usize,
    depth: Cell<usize>,
    sink: RefCell<Option<&'a mut dyn EventSink>>,
    output: RefCell<Option<&'a mut dyn Write>>,
}

impl<'a> Engine<'a> {
    pub fn new(table: &'a ProcTable) -> Engine<'a> {
        Engine {
            table,
            policy: ExceptionPolicy::CatchAll,
            max_depth: DEFAULT_MAX_DEPTH,
            depth: Cell::new(0),
            sink: RefCell::new(None),
            output: RefCell::new(None),
        }
    }

    pub fn with_policy(mut self, policy: ExceptionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Receives every log event in execution order.
    pub fn with_sink(self, sink: &'a mut dyn EventSink) -> Self {
        *self.sink.borrow_mut() = Some(sink);
        self
    }

    /// Destination of `print/1`; output is discarded without one.
    pub fn with_output(self, out: &'a mut dyn Write) -> Self {
        *self.output.borrow_mut() = Some(out);
        self
    }

    /// Enumerates solutions of `query`, reporting the query's variables.
    pub fn solve(&self, query: &Goal, limit: Option<usize>) -> Result<EngineOutcome, EngineError> {
        self.solve_reporting(query, &query.vars(), limit)
    }

    /// Like [`Engine::solve`], reporting only `vars`.
    pub fn solve_reporting(
        &self,
        query: &Goal,
        vars: &[String],
        limit: Option<usize>,
    ) -> Result<EngineOutcome, EngineError> {
        match self.solve_from(query, &Bindings::new(), limit) {
            Ok(all) => Ok(EngineOutcome::Solutions(
                all.iter()
                    .map(|b| Solution {
                        bindings: vars
                            .iter()
                            .filter_map(|v| {
                                let t = b.resolve(&Term::var(v.clone()));
                                t.is_ground().then(|| (v.clone(), t))
                            })
                            .collect(),
                    })
                    .collect(),
            )),
            Err(Unwind::Throw(t)) => match self.policy {
                ExceptionPolicy::CatchAll => Ok(EngineOutcome::Exception(t)),
                ExceptionPolicy::Propagate => Err(EngineError::Uncaught(t)),
            },
            Err(Unwind::Internal(m)) => Err(EngineError::Internal(m)),
        }
    }

    /// Enumerates the binding sets under which `goal` succeeds, starting from `initial`.
    pub fn solve_from(&self, goal: &Goal, initial: &Bindings, limit: Option<usize>) -> Result<Vec<Bindings>, Unwind> {
        let mut out = Vec::new();
        if limit == Some(0) {
            return Ok(out);
        }
        self.depth.set(0);
        self.goal(goal, initial, &mut |b| {
            out.push(b.clone());
            Ok(if limit.is_some_and(|n| out.len() >= n) {
                Flow::Stop
            } else {
                Flow::Continue
            })
        })?;
        Ok(out)
    }

    fn emit(&self, e: LogEvent) {
        if let Some(s) = self.sink.borrow_mut().as_mut() {
            s.event(e);
        }
    }

    fn has_sink(&self) -> bool {
        self.sink.borrow().is_some()
    }

    fn goal(&self, g: &Goal, b: &Bindings, k: Cont) -> Res {
        match &g.kind {
            GoalKind::Unify(x, y) => match unify(x, y, b) {
                Some(b2) => k(&b2),
                None => Ok(Flow::Continue),
            },
            GoalKind::Call(name, args) => self.call(name, args, b, k),
            GoalKind::Conj(gs) => self.conj(gs, b, k),
            GoalKind::Disj(ds) => {
                for d in ds {
                    if self.goal(d, b, k)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
                Ok(Flow::Continue)
            }
            GoalKind::Not(inner) => {
                if self.first_exhaustive(inner, b)?.is_some() {
                    Ok(Flow::Continue)
                } else {
                    k(b)
                }
            }
            GoalKind::IfThenElse(c, t, e) => match self.first_exhaustive(c, b)? {
                Some(cb) => self.goal(t, &cb, k),
                None => self.goal(e, b, k),
            },
            GoalKind::Log(l) => {
                self.log(l, b)?;
                k(b)
            }
        }
    }

    fn conj(&self, gs: &[Goal], b: &Bindings, k: Cont) -> Res {
        match gs {
            [] => k(b),
            [g] => self.goal(g, b, k),
            [g, rest @ ..] => self.goal(g, b, &mut |b2| self.conj(rest, b2, &mut *k)),
        }
    }

    /// Runs `g` to exhaustion and returns its first solution. Conditions are
    /// enumerated completely so that every branch they contain is executed
    /// the same way whether or not logging is switched on.
    fn first_exhaustive(&self, g: &Goal, b: &Bindings) -> Result<Option<Bindings>, Unwind> {
        let mut first = None;
        self.goal(g, b, &mut |b2| {
            if first.is_none() {
                first = Some(b2.clone());
            }
            Ok(Flow::Continue)
        })?;
        Ok(first)
    }

    fn log(&self, l: &LogGoal, b: &Bindings) -> Result<(), Unwind> {
        if !self.has_sink() {
            return Ok(());
        }
        match l {
            LogGoal::Label(n) => self.emit(LogEvent::Label(*n)),
            LogGoal::SwitchEntry(s) => {
                let plan = self.switch_plan(*s, b)?;
                if !plan.pre_switch.is_empty() {
                    self.emit(LogEvent::Batch(plan.pre_switch));
                }
            }
            LogGoal::Batch { switch, leaf } => {
                let plan = self.switch_plan(*switch, b)?;
                let batch = plan.batch_for(*leaf).ok_or_else(|| {
                    Unwind::Internal(format!("leaf {} of switch {} reached but not planned", leaf, switch))
                })?;
                self.emit(LogEvent::Batch(batch.to_vec()));
            }
        }
        Ok(())
    }

    fn switch_plan(&self, id: u32, b: &Bindings) -> Result<crate::coverage::BatchPlan, Unwind> {
        let tree = self
            .table
            .switches
            .get(&id)
            .ok_or_else(|| Unwind::Internal(format!("undeclared switch {}", id)))?;
        let mut entry = Bindings::new();
        for v in &tree.entry_vars {
            let t = b.resolve(&Term::var(v.clone()));
            if !t.is_ground() {
                return Err(Unwind::Internal(format!("switch {} entered with {} unbound", id, v)));
            }
            entry.bind(v.clone(), t);
        }
        Ok(tree.plan(&entry))
    }

    fn call(&self, name: &str, args: &[Term], b: &Bindings, k: Cont) -> Res {
        if is_builtin(name, args.len()) {
            let mut print = |s: &str| {
                if let Some(o) = self.output.borrow_mut().as_mut() {
                    let _ = writeln!(o, "{}", s);
                }
            };
            return match eval_builtin(name, args, b, &mut print)? {
                Some(b2) => k(&b2),
                None => Ok(Flow::Continue),
            };
        }
        let proc = self
            .table
            .get(name)
            .filter(|p| p.arity() == args.len())
            .ok_or_else(|| Unwind::Internal(format!("unknown procedure {}/{}", name, args.len())))?;
        let depth = self.depth.get() + 1;
        if depth > self.max_depth {
            return Err(Unwind::Throw(error_term(
                "resource_error",
                vec![Term::atom("call_depth")],
            )));
        }
        self.depth.set(depth);
        let r = self.call_proc(proc, args, b, k);
        self.depth.set(depth - 1);
        r
    }

    fn call_proc(&self, proc: &Procedure, args: &[Term], b: &Bindings, k: Cont) -> Res {
        let mut inputs = Vec::new();
        for (a, m) in args.iter().zip(&proc.arg_modes) {
            if *m == ArgMode::In {
                let t = b.resolve(a);
                if !t.is_ground() {
                    return Err(Unwind::Throw(error_term(
                        "instantiation_error",
                        vec![Term::atom(proc.name.clone())],
                    )));
                }
                inputs.push(Some(t));
            } else {
                inputs.push(None);
            }
        }
        // hands each callee solution (the output values) back to the caller
        let deliver = |outs: &[Term], k: Cont| -> Res {
            let mut b2 = b.clone();
            let mut i = 0;
            for (a, m) in args.iter().zip(&proc.arg_modes) {
                if *m == ArgMode::Out {
                    if !b2.unify_in_place(a, &outs[i]) {
                        return Ok(Flow::Continue);
                    }
                    i += 1;
                }
            }
            k(&b2)
        };
        if proc.determinism.at_most_one() {
            let mut sols: Vec<Vec<Term>> = Vec::new();
            self.enumerate(proc, &inputs, &mut |outs| {
                if !sols.contains(&outs) {
                    sols.push(outs);
                }
                Ok(Flow::Continue)
            })?;
            match (proc.determinism, sols.len()) {
                (Determinism::Det, 0) => Err(self.det_error(proc, "no_solution")),
                (_, n) if n > 1 => Err(self.det_error(proc, "multiple_solutions")),
                (_, 0) => Ok(Flow::Continue),
                _ => deliver(&sols[0], k),
            }
        } else {
            let mut count = 0usize;
            let flow = self.enumerate(proc, &inputs, &mut |outs| {
                count += 1;
                deliver(&outs, &mut *k)
            })?;
            if flow == Flow::Continue && count == 0 && proc.determinism == Determinism::Multi {
                return Err(self.det_error(proc, "no_solution"));
            }
            Ok(flow)
        }
    }

    fn det_error(&self, proc: &Procedure, what: &str) -> Unwind {
        Unwind::Throw(Term::compound(
            "determinism_error",
            vec![
                Term::atom(proc.name.clone()),
                Term::atom(proc.determinism.to_string()),
                Term::atom(what),
            ],
        ))
    }

    /// Runs every clause in a fresh frame and passes the output values on.
    fn enumerate(&self, proc: &Procedure, inputs: &[Option<Term>], k: &mut dyn FnMut(Vec<Term>) -> Res) -> Res {
        for clause in &proc.clauses {
            let mut frame = Bindings::new();
            for (v, input) in clause.head.iter().zip(inputs) {
                if let Some(t) = input {
                    frame.bind(v.clone(), t.clone());
                }
            }
            let flow = self.goal(&clause.body, &frame, &mut |fb| {
                let mut outs = Vec::new();
                for (v, input) in clause.head.iter().zip(inputs) {
                    if input.is_none() {
                        let t = fb.resolve(&Term::var(v.clone()));
                        if !t.is_ground() {
                            return Err(Unwind::Internal(format!(
                                "{}: output {} unbound at success",
                                proc.name, v
                            )));
                        }
                        outs.push(t);
                    }
                }
                k(outs)
            })?;
            if flow == Flow::Stop {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{solve, EngineOutcome};
    use crate::lang::{parse_goal, parse_program};
    use crate::modes::analyze;

    const LISTS: &str = "
:- mode append(in, in, out) is det.
:- mode append(out, out, in) is multi.
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
:- mode member(in, in) is semidet.
:- mode member(out, in) is nondet.
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
:- mode boom(out) is det.
boom(X) :- X = 1, throw(oops).
:- mode two(out) is det.
two(X) :- ( X = 1 ; X = 2 ).
:- mode deep(in) is semidet.
deep(N) :- N > 0, M is N - 1, deep(M).
";

    fn table() -> ProcTable {
        analyze(&parse_program(LISTS).unwrap()).unwrap()
    }

    fn run(q: &str, limit: Option<usize>) -> EngineOutcome {
        solve(
            &parse_goal(q).unwrap(),
            &table(),
            limit,
            ExceptionPolicy::CatchAll,
            None,
        )
        .unwrap()
    }

    fn values(out: EngineOutcome, var: &str) -> Vec<String> {
        match out {
            EngineOutcome::Solutions(s) => s.iter().map(|s| s.get(var).unwrap().to_string()).collect(),
            EngineOutcome::Exception(t) => panic!("exception {}", t),
        }
    }

    #[test]
    fn member_enumerates_in_clause_order() {
        assert_eq!(
            values(run("member__m1(X, [1, 3, 4, 2])", None), "X"),
            ["1", "3", "4", "2"]
        );
        assert_eq!(values(run("member__m1(X, [1, 3, 4, 2])", Some(2)), "X"), ["1", "3"]);
    }

    #[test]
    fn append_splits() {
        let out = run("append__m1(L1, L2, [1, 2, 3])", None);
        let EngineOutcome::Solutions(s) = out else { panic!() };
        let shown: Vec<String> = s.iter().map(|s| s.to_string()).collect();
        assert_eq!(
            shown,
            [
                "L1 = [], L2 = [1, 2, 3]",
                "L1 = [1], L2 = [2, 3]",
                "L1 = [1, 2], L2 = [3]",
                "L1 = [1, 2, 3], L2 = []"
            ]
        );
    }

    #[test]
    fn semidet_with_duplicate_witnesses_succeeds_once() {
        let EngineOutcome::Solutions(s) = run("member__m0(1, [1, 2, 1])", None) else {
            panic!()
        };
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn exceptions_and_policies() {
        assert_eq!(run("boom__m0(X)", None), EngineOutcome::Exception(Term::atom("oops")));
        let err = solve(
            &parse_goal("boom__m0(X)").unwrap(),
            &table(),
            None,
            ExceptionPolicy::Propagate,
            None,
        );
        assert_eq!(err, Err(EngineError::Uncaught(Term::atom("oops"))));
    }

    #[test]
    fn determinism_violations_are_exceptions() {
        let EngineOutcome::Exception(t) = run("two__m0(X)", None) else {
            panic!()
        };
        assert_eq!(t.to_string(), "determinism_error(two__m0, det, multiple_solutions)");
    }

    #[test]
    fn call_depth_is_bounded() {
        let t = table();
        let engine = Engine::new(&t).with_max_depth(50);
        let out = engine.solve(&parse_goal("deep__m0(100)").unwrap(), None).unwrap();
        let EngineOutcome::Exception(e) = out else { panic!() };
        assert_eq!(e.to_string(), "error(resource_error(call_depth))");
        let out = engine.solve(&parse_goal("deep__m0(10)").unwrap(), None).unwrap();
        assert_eq!(out, EngineOutcome::Solutions(vec![]));
    }

    #[test]
    fn print_goes_to_injected_output() {
        let t = table();
        let mut buf: Vec<u8> = Vec::new();
        Engine::new(&t)
            .with_output(&mut buf)
            .solve(&parse_goal("print(f(1))").unwrap(), None)
            .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "f(1)\n");
    }
}
