//! Mode-directed goal ordering and splitting into procedures.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use super::normalize::{finish_conj, normalize_goal, to_superhomogeneous, FreshVars};
use super::procedure::{proc_name, Origin, ProcClause, ProcTable, Procedure, RenameEntry, RenamingTable};
use super::ModeError;
use crate::lang::{builtin_modes, goal_to_string, ArgMode, Goal, GoalKind, ModeDecl, PredKey, Program, Term};

pub type Bound = BTreeSet<String>;

/// The procedures a call may resolve to, in mode-declaration order.
#[derive(Clone, Debug, Default)]
pub struct ModeEnv {
    procs: BTreeMap<PredKey, Vec<(ModeDecl, String)>>,
}

impl ModeEnv {
    pub fn from_program(program: &Program) -> ModeEnv {
        let mut procs = BTreeMap::new();
        for pred in program.predicates.values() {
            let rows = pred
                .modes
                .iter()
                .enumerate()
                .map(|(k, m)| (m.clone(), proc_name(&pred.name, k)))
                .collect();
            procs.insert(pred.key(), rows);
        }
        ModeEnv { procs }
    }

    /// Modes of already-split procedures, each callable under its own name.
    pub fn from_table(table: &ProcTable) -> ModeEnv {
        let mut procs = BTreeMap::new();
        for p in table.iter() {
            procs.insert(
                PredKey::new(p.name.clone(), p.arity()),
                vec![(p.mode(), p.name.clone())],
            );
        }
        ModeEnv { procs }
    }

    /// Like [`ModeEnv::from_table`], plus every source predicate resolving to
    /// the procedures split from it.
    pub fn for_queries(table: &ProcTable) -> ModeEnv {
        let mut env = ModeEnv::from_table(table);
        for (pred, procs) in by_origin(&table.iter().cloned().collect::<Vec<_>>()) {
            let mut rows: Vec<(usize, ModeDecl, String)> = procs
                .iter()
                .map(|p| (p.origin.as_ref().map_or(0, |o| o.mode_index), p.mode(), p.name.clone()))
                .collect();
            rows.sort_by_key(|r| r.0);
            env.procs
                .entry(pred)
                .or_insert_with(|| rows.into_iter().map(|(_, m, n)| (m, n)).collect());
        }
        env
    }

    pub fn insert(&mut self, key: PredKey, rows: Vec<(ModeDecl, String)>) {
        self.procs.insert(key, rows);
    }

    pub fn rows(&self, key: &PredKey) -> Option<&[(ModeDecl, String)]> {
        self.procs.get(key).map(Vec::as_slice)
    }

    /// Resolves a call given the currently bound variables: among the modes whose
    /// `in` arguments are all bound, the one with the most `in` arguments wins,
    /// ties going to the earlier declaration. Builtins keep their name.
    pub fn select(&self, name: &str, args: &[Term], bound: &Bound) -> Result<Option<(ModeDecl, String)>, ModeError> {
        let ground = |t: &Term| t.vars().iter().all(|v| bound.contains(v));
        let fits = |m: &ModeDecl| {
            m.arg_modes
                .iter()
                .zip(args)
                .all(|(mode, a)| *mode == ArgMode::Out || ground(a))
        };
        if let Some(modes) = builtin_modes(name, args.len()) {
            return Ok(pick(
                modes
                    .into_iter()
                    .map(|m| (m, name.to_string()))
                    .filter(|(m, _)| fits(m)),
            ));
        }
        let key = PredKey::new(name, args.len());
        let rows = self.procs.get(&key).ok_or_else(|| ModeError::NoModes(key.clone()))?;
        if rows.is_empty() {
            return Err(ModeError::NoModes(key));
        }
        Ok(pick(rows.iter().filter(|(m, _)| fits(m)).cloned()))
    }
}

fn pick(candidates: impl Iterator<Item = (ModeDecl, String)>) -> Option<(ModeDecl, String)> {
    let mut best: Option<(ModeDecl, String)> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.0.input_count() > b.0.input_count()) {
            best = Some(c);
        }
    }
    best
}

/// Orders the goals of one clause body.
pub struct Scheduler<'a> {
    pub env: &'a ModeEnv,
    pub proc: &'a str,
    /// Occurrences of every variable in the whole clause, head included.
    counts: BTreeMap<String, usize>,
}

impl<'a> Scheduler<'a> {
    pub fn new(env: &'a ModeEnv, proc: &'a str, head: &[String], body: &Goal) -> Scheduler<'a> {
        let mut counts = BTreeMap::new();
        for v in head {
            *counts.entry(v.clone()).or_insert(0) += 1;
        }
        body.count_var_occurrences(&mut counts);
        Scheduler { env, proc, counts }
    }

    /// Variables of `g` that also occur outside it.
    fn nonlocal(&self, g: &Goal) -> Bound {
        let mut inner = BTreeMap::new();
        g.count_var_occurrences(&mut inner);
        inner
            .into_iter()
            .filter(|(v, n)| self.counts.get(v).copied().unwrap_or(0) > *n)
            .map(|(v, _)| v)
            .collect()
    }

    /// Schedules a conjunction; returns the ordered goals and the bound set after it.
    pub fn conj(&self, goals: Vec<Goal>, bound: &Bound) -> Result<(Vec<Goal>, Bound), ModeError> {
        let mut bound = bound.clone();
        let mut pending: Vec<Goal> = goals;
        let mut done = Vec::new();
        while !pending.is_empty() {
            let mut picked = None;
            for (i, g) in pending.iter().enumerate() {
                if let Some(r) = self.try_goal(g, &bound)? {
                    picked = Some((i, r));
                    break;
                }
            }
            match picked {
                Some((i, (g, b))) => {
                    pending.remove(i);
                    done.push(g);
                    bound = b;
                }
                None => {
                    let g = &pending[0];
                    return Err(ModeError::Unschedulable {
                        proc: self.proc.to_string(),
                        goal: goal_to_string(g, 0).split_whitespace().collect::<Vec<_>>().join(" "),
                        span: g.span,
                    });
                }
            }
        }
        Ok((done, bound))
    }

    fn sub(&self, g: &Goal, bound: &Bound) -> Result<Option<(Goal, Bound)>, ModeError> {
        match self.conj(g.clone().into_conjuncts(), bound) {
            Ok((gs, b)) => Ok(Some((Goal::conj(gs, g.span), b))),
            Err(ModeError::Unschedulable { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// The goal with renamed calls and the bound set after it, or `None` when
    /// it is not executable yet.
    fn try_goal(&self, g: &Goal, bound: &Bound) -> Result<Option<(Goal, Bound)>, ModeError> {
        let span = g.span;
        match &g.kind {
            GoalKind::Unify(a, b) => {
                let all_bound = |t: &Term| t.vars().iter().all(|v| bound.contains(v));
                if all_bound(a) || all_bound(b) {
                    let mut after = bound.clone();
                    after.extend(a.vars());
                    after.extend(b.vars());
                    Ok(Some((g.clone(), after)))
                } else {
                    Ok(None)
                }
            }
            GoalKind::Call(name, args) => match self.env.select(name, args, bound)? {
                Some((_, new_name)) => {
                    let mut after = bound.clone();
                    for a in args {
                        after.extend(a.vars());
                    }
                    Ok(Some((Goal::call(new_name, args.clone(), span), after)))
                }
                None => Ok(None),
            },
            GoalKind::Conj(_) => self.sub(g, bound),
            GoalKind::Disj(ds) => {
                let mut out = Vec::new();
                let mut common: Option<Bound> = None;
                for d in ds {
                    let Some((d, b)) = self.sub(d, bound)? else {
                        return Ok(None);
                    };
                    common = Some(match common {
                        None => b,
                        Some(c) => c.intersection(&b).cloned().collect(),
                    });
                    out.push(d);
                }
                Ok(Some((
                    Goal::new(GoalKind::Disj(out), span),
                    common.unwrap_or_else(|| bound.clone()),
                )))
            }
            GoalKind::Not(inner) => {
                let Some((inner, b)) = self.sub(inner, bound)? else {
                    return Ok(None);
                };
                let nonlocal = self.nonlocal(g);
                if b.difference(bound).any(|v| nonlocal.contains(v)) {
                    return Ok(None);
                }
                Ok(Some((Goal::new(GoalKind::Not(Box::new(inner)), span), bound.clone())))
            }
            GoalKind::IfThenElse(c, t, e) => {
                let Some((c2, cb)) = self.sub(c, bound)? else {
                    return Ok(None);
                };
                // the condition may bind variables used in the then-branch only
                let nonlocal = self.nonlocal(g);
                if cb.difference(bound).any(|v| nonlocal.contains(v)) {
                    return Ok(None);
                }
                let Some((t2, tb)) = self.sub(t, &cb)? else {
                    return Ok(None);
                };
                let Some((e2, eb)) = self.sub(e, bound)? else {
                    return Ok(None);
                };
                let after = tb.intersection(&eb).cloned().collect();
                Ok(Some((
                    Goal::new(GoalKind::IfThenElse(Box::new(c2), Box::new(t2), Box::new(e2)), span),
                    after,
                )))
            }
            GoalKind::Log(_) => Ok(Some((g.clone(), bound.clone()))),
        }
    }
}

/// Builds one procedure per (predicate, mode) from a superhomogeneous program.
pub fn reorder_and_split(program: &Program) -> Result<(Vec<Procedure>, RenamingTable), ModeError> {
    let env = ModeEnv::from_program(program);
    let mut procs = Vec::new();
    let mut table = RenamingTable::default();
    for pred in program.predicates.values() {
        for (k, mode) in pred.modes.iter().enumerate() {
            let name = proc_name(&pred.name, k);
            let mut clauses = Vec::new();
            for clause in &pred.clauses {
                let head: Vec<String> = clause
                    .head
                    .iter()
                    .map(|t| {
                        t.as_var()
                            .map(str::to_string)
                            .ok_or_else(|| ModeError::NotProcedural(pred.key()))
                    })
                    .collect::<Result<_, _>>()?;
                clauses.push(schedule_clause(&env, &name, mode, head, &clause.body, clause.span)?);
            }
            table.entries.push(RenameEntry {
                pred: pred.key(),
                mode_index: k,
                proc_name: name.clone(),
            });
            procs.push(Procedure {
                name,
                origin: Some(Origin {
                    pred: pred.key(),
                    mode_index: k,
                }),
                arg_modes: mode.arg_modes.clone(),
                determinism: mode.determinism,
                clauses,
                type_sig: pred.type_sig.clone(),
            });
        }
    }
    Ok((procs, table))
}

pub(crate) fn schedule_clause(
    env: &ModeEnv,
    proc: &str,
    mode: &ModeDecl,
    head: Vec<String>,
    body: &Goal,
    span: crate::lang::Span,
) -> Result<ProcClause, ModeError> {
    let sched = Scheduler::new(env, proc, &head, body);
    let bound: Bound = head
        .iter()
        .zip(&mode.arg_modes)
        .filter(|(_, m)| **m == ArgMode::In)
        .map(|(v, _)| v.clone())
        .collect();
    let (goals, after) = sched.conj(body.clone().into_conjuncts(), &bound)?;
    for (v, m) in head.iter().zip(&mode.arg_modes) {
        if *m == ArgMode::Out && !after.contains(v) {
            return Err(ModeError::OutputUnbound {
                proc: proc.to_string(),
                var: v.clone(),
                span,
            });
        }
    }
    Ok(ProcClause {
        head,
        body: Goal::conj(goals, body.span),
        span,
    })
}

/// The full mode-analysis pipeline: normalization, then ordering and splitting.
pub fn analyze(program: &Program) -> Result<ProcTable, ModeError> {
    let normal = to_superhomogeneous(program);
    let (procs, renaming) = reorder_and_split(&normal)?;
    let mut table = ProcTable::new(procs);
    table.renaming = renaming;
    table.type_defs = program.type_defs.clone();
    Ok(table)
}

/// Normalizes and schedules a query against `table`, with `bound` ground
/// on entry. Calls may name source predicates or procedures.
pub fn compile_query(query: &Goal, table: &ProcTable, bound: &Bound) -> Result<Goal, ModeError> {
    compile_query_in(&ModeEnv::for_queries(table), query, bound)
}

pub fn compile_query_in(env: &ModeEnv, query: &Goal, bound: &Bound) -> Result<Goal, ModeError> {
    let mut fresh = FreshVars::avoiding(query.vars().into_iter().chain(bound.iter().cloned()));
    let goals = normalize_goal(query, &mut fresh);
    let body = finish_conj(goals, query.span);
    let sched = Scheduler::new(env, "query", &[], &body);
    let (goals, _) = sched.conj(body.clone().into_conjuncts(), bound)?;
    Ok(Goal::conj(goals, query.span))
}

/// Procedures grouped by the predicate they came from.
pub fn by_origin(procs: &[Procedure]) -> IndexMap<PredKey, Vec<&Procedure>> {
    let mut out: IndexMap<PredKey, Vec<&Procedure>> = IndexMap::new();
    for p in procs {
        if let Some(o) = &p.origin {
            out.entry(o.pred.clone()).or_default().push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_goal, parse_program, Determinism};

    const LISTS: &str = "
:- pred append(list(T), list(T), list(T)).
:- mode append(in, in, out) is det.
:- mode append(out, out, in) is multi.
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
";

    #[test]
    fn append_splits_into_two_procedures() {
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        let names: Vec<&str> = table.procs.keys().map(String::as_str).collect();
        assert_eq!(names, ["append__m0", "append__m1"]);
        assert_eq!(table.procs["append__m1"].determinism, Determinism::Multi);
        assert_eq!(
            table.renaming.to_file_string(),
            "append/3\t0\tappend__m0\nappend/3\t1\tappend__m1\n"
        );
        // the recursive call in mode (out, out, in) is renamed to the same mode
        let body = &table.procs["append__m1"].clauses[1].body;
        assert_eq!(
            body,
            &parse_goal("V3 = '[|]'(V4, R), H = V4, append__m1(T, V2, R), V1 = '[|]'(H, T)").unwrap()
        );
    }

    #[test]
    fn queries_pick_modes_by_instantiation() {
        let table = analyze(&parse_program(LISTS).unwrap()).unwrap();
        let q = compile_query(&parse_goal("append(X, Y, [1])").unwrap(), &table, &Bound::new()).unwrap();
        assert_eq!(
            crate::lang::goal_to_string(&q, 0),
            "V1 = 1,\nV2 = [],\nV3 = [V1 | V2],\nappend__m1(X, Y, V3)"
        );
        let q = compile_query(&parse_goal("append__m0([], [], Z)").unwrap(), &table, &Bound::new()).unwrap();
        assert_eq!(
            crate::lang::goal_to_string(&q, 0),
            "V1 = [],\nV2 = [],\nappend__m0(V1, V2, Z)"
        );
        assert!(matches!(
            compile_query(&parse_goal("nope(X)").unwrap(), &table, &Bound::new()),
            Err(ModeError::NoModes(_))
        ));
    }

    #[test]
    fn goals_move_after_their_producers() {
        let src = ":- mode q(in, out) is det.\nq(X, X).\n:- mode p(out) is det.\np(Y) :- q(X, Y), X = 1.";
        let table = analyze(&parse_program(src).unwrap()).unwrap();
        assert_eq!(
            table.procs["p__m0"].clauses[0].body,
            parse_goal("X = 1, q__m0(X, V1)").unwrap()
        );
    }

    #[test]
    fn unschedulable_goal_is_reported() {
        let src = ":- mode q(in, out) is det.\nq(X, X).\n:- mode p(out) is det.\np(Y) :- q(X, Y).";
        let err = analyze(&parse_program(src).unwrap()).unwrap_err();
        assert!(
            matches!(err, ModeError::Unschedulable { ref goal, .. } if goal == "q(X, V1)"),
            "{}",
            err
        );
    }

    #[test]
    fn negation_may_not_bind_outside_variables() {
        let src = ":- mode p(in, out) is semidet.\np(A, B) :- not(B = A), B = 2.";
        let table = analyze(&parse_program(src).unwrap()).unwrap();
        assert_eq!(
            table.procs["p__m0"].clauses[0].body,
            parse_goal("V2 = 2, not(V2 = V1)").unwrap()
        );
    }

    #[test]
    fn most_instantiated_mode_wins() {
        let src = ":- mode q(in, out) is det.\n:- mode q(in, in) is semidet.\nq(X, X).\n\
                   :- mode p(in) is semidet.\np(A) :- q(A, A).";
        let table = analyze(&parse_program(src).unwrap()).unwrap();
        assert_eq!(
            table.procs["p__m0"].clauses[0].body,
            parse_goal("q__m1(V1, V1)").unwrap()
        );
    }

    #[test]
    fn output_must_be_bound() {
        let src = ":- mode p(out) is det.\np(_).";
        assert!(matches!(
            analyze(&parse_program(src).unwrap()),
            Err(ModeError::OutputUnbound { .. })
        ));
    }

    #[test]
    fn scheduling_is_stable() {
        let p = parse_program(LISTS).unwrap();
        assert_eq!(analyze(&p).unwrap(), analyze(&p).unwrap());
    }
}
