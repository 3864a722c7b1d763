//! Switch-aware instrumentation: plain `log(L)` goals at every label, except
//! inside switch trees, where one `log_batch(S, Leaf)` per leaf replaces the
//! per-label goals and `log_switch(S)` precedes the switch.

use std::collections::{BTreeMap, BTreeSet};

use super::label::{instrument_with, label_program, naive_instrument, LConj, LGoal, LGoalKind, LabelledProcedure};
use super::meta::CounterMeta;
use super::switch::SwitchTree;
use super::CoverageError;
use crate::lang::{Goal, GoalKind, LogGoal};
use crate::modes::{check_determinism, ProcTable, Procedure};

/// Everything produced by instrumenting a procedure table.
#[derive(Clone, Debug)]
pub struct Instrumented {
    /// The batched program, with its switch declarations.
    pub table: ProcTable,
    /// The naively labelled program (a log goal at every label).
    pub labelled_table: ProcTable,
    pub meta: CounterMeta,
    pub labelled: Vec<LabelledProcedure>,
}

/// Where tree labels sit: suppressed nodes and the switch owning each leaf.
struct TreeIndex {
    suppressed: BTreeSet<u32>,
    leaves: BTreeMap<u32, u32>,
}

impl TreeIndex {
    fn new(switches: &[SwitchTree]) -> TreeIndex {
        let mut suppressed = BTreeSet::new();
        let mut leaves = BTreeMap::new();
        for t in switches {
            suppressed.extend(t.labels());
            for l in &t.leaves {
                leaves.insert(*l, t.id);
            }
        }
        TreeIndex { suppressed, leaves }
    }

    fn log_at(&self, label: u32, span: crate::lang::Span) -> Option<Goal> {
        if let Some(s) = self.leaves.get(&label) {
            Some(Goal::log(
                LogGoal::Batch {
                    switch: *s,
                    leaf: label,
                },
                span,
            ))
        } else if self.suppressed.contains(&label) {
            None
        } else {
            Some(Goal::log(LogGoal::Label(label), span))
        }
    }

    fn conj(&self, c: &LConj) -> Goal {
        let mut out = Vec::new();
        out.extend(self.log_at(c.labels[0], c.span));
        for (g, l) in c.goals.iter().zip(&c.labels[1..]) {
            if let LGoalKind::Disj { switch: Some(id), .. } = &g.kind {
                out.push(Goal::log(LogGoal::SwitchEntry(*id), g.span));
            }
            out.push(self.goal(g));
            out.extend(self.log_at(*l, g.span));
        }
        if out.is_empty() {
            out.push(Goal::truth(c.span));
        }
        Goal::conj(out, c.span)
    }

    fn goal(&self, g: &LGoal) -> Goal {
        let kind = match &g.kind {
            LGoalKind::Atom(a) => return a.clone(),
            LGoalKind::Disj { disjuncts, .. } => GoalKind::Disj(disjuncts.iter().map(|d| self.conj(d)).collect()),
            LGoalKind::Not(c) => GoalKind::Not(Box::new(self.conj(c))),
            LGoalKind::Ite(c, t, e) => {
                GoalKind::IfThenElse(Box::new(self.conj(c)), Box::new(self.conj(t)), Box::new(self.conj(e)))
            }
        };
        Goal::new(kind, g.span)
    }
}

/// Instruments every procedure of `table`.
pub fn instrument(table: &ProcTable) -> Result<Instrumented, CoverageError> {
    if table.iter().any(|p| p.clauses.iter().any(|c| c.body.contains_log())) || !table.switches.is_empty() {
        return Err(CoverageError::AlreadyInstrumented);
    }
    let procs: Vec<Procedure> = table.iter().cloned().collect();
    let (labelled, meta, switches) = label_program(&procs);
    let index = TreeIndex::new(&switches);

    let mut batched = Vec::new();
    let mut naive = Vec::new();
    for lp in &labelled {
        batched.extend(instrument_with(lp, &|c| index.conj(c)));
        naive.extend(naive_instrument(lp));
    }

    let before = check_determinism(&procs).len();
    let diags = check_determinism(&batched);
    if diags.len() > before {
        return Err(CoverageError::DeterminismRecheck(
            diags.into_iter().map(|d| d.to_string()).collect(),
        ));
    }

    let mut out = ProcTable::new(batched);
    out.switches = switches.into_iter().map(|t| (t.id, t)).collect();
    out.type_defs = table.type_defs.clone();
    out.renaming = table.renaming.clone();
    let mut labelled_table = ProcTable::new(naive);
    labelled_table.type_defs = table.type_defs.clone();
    labelled_table.renaming = table.renaming.clone();
    Ok(Instrumented {
        table: out,
        labelled_table,
        meta,
        labelled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{replay_events, ConstructKind};
    use crate::engine::{solve, EngineOutcome, ExceptionPolicy, LogEvent};
    use crate::lang::{parse_goal, parse_program};
    use crate::modes::analyze;

    const SW: &str = "
:- mode p(out) is det.
p(1).
:- mode q(in, out) is det.
q(A, A).
:- mode r(in, out) is det.
r(I, I).
:- mode sw(in, out) is semidet.
sw(X, Out) :-
    (
        X = f,
        p(Out)
    ;
        Y = X,
        (
            Y = g,
            Intermediate = 42
        ;
            Z = Y,
            Z = h(Arg),
            q(Arg, Intermediate)
        ),
        r(Intermediate, Out)
    ).
";

    fn counts(table: &ProcTable, meta: &CounterMeta, q: &str) -> (EngineOutcome, Vec<u64>) {
        let mut events: Vec<LogEvent> = Vec::new();
        let out = solve(
            &parse_goal(q).unwrap(),
            table,
            None,
            ExceptionPolicy::CatchAll,
            Some(&mut events),
        )
        .unwrap();
        let c = replay_events(&events, meta).unwrap();
        (out, c.iter().map(|(_, n)| n).collect())
    }

    #[test]
    fn switch_is_batched_and_counts_match_naive() {
        let table = analyze(&parse_program(SW).unwrap()).unwrap();
        let inst = instrument(&table).unwrap();
        assert_eq!(inst.table.switches.len(), 1);
        assert!(inst.meta.entries.iter().any(|e| e.kind == ConstructKind::Switch));
        let text = crate::lang::program_to_string(&inst.table.to_program());
        assert!(text.contains("log_switch(1)"));
        assert_eq!(text.matches("log_batch(1, ").count(), 3);

        for q in ["sw__m0(f, O)", "sw__m0(g, O)", "sw__m0(h(3), O)", "sw__m0(k, O)"] {
            let (plain, _) = counts(&table, &inst.meta, q);
            let (batched, b) = counts(&inst.table, &inst.meta, q);
            let (naive, n) = counts(&inst.labelled_table, &inst.meta, q);
            assert_eq!(plain, batched, "{}", q);
            assert_eq!(plain, naive, "{}", q);
            assert_eq!(b, n, "{}", q);
        }
    }

    #[test]
    fn instrumented_input_is_refused() {
        let table = analyze(&parse_program(SW).unwrap()).unwrap();
        let inst = instrument(&table).unwrap();
        assert_eq!(instrument(&inst.table).unwrap_err(), CoverageError::AlreadyInstrumented);
    }
}
