//! Superhomogeneous form.
//!
//! Naming scheme: fresh variables are `V1`, `V2`, ... numbered per clause,
//! skipping names already used in the clause. Head argument `i` becomes the
//! `i`-th fresh variable. A head argument that is a variable not yet renamed
//! is replaced by that fresh variable throughout the clause; any other head
//! argument becomes an explicit unification placed before the body.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::lang::{Clause, Goal, GoalKind, PredicateDef, Program, Span, Term};

/// Source of fresh variable names that avoids a set of taken names.
#[derive(Clone, Debug, Default)]
pub struct FreshVars {
    used: BTreeSet<String>,
    next: usize,
}

impl FreshVars {
    pub fn avoiding(names: impl IntoIterator<Item = String>) -> FreshVars {
        FreshVars {
            used: names.into_iter().collect(),
            next: 0,
        }
    }

    pub fn fresh(&mut self) -> String {
        loop {
            self.next += 1;
            let name = format!("V{}", self.next);
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

pub fn to_superhomogeneous(program: &Program) -> Program {
    let mut out = program.clone();
    for pred in out.predicates.values_mut() {
        normalize_predicate(pred);
    }
    out
}

fn normalize_predicate(pred: &mut PredicateDef) {
    for clause in &mut pred.clauses {
        *clause = normalize_clause(clause);
    }
}

pub fn normalize_clause(clause: &Clause) -> Clause {
    let mut names = Vec::new();
    clause.head.iter().for_each(|t| t.collect_vars(&mut names));
    clause.body.collect_vars(&mut names);
    let mut counts = BTreeMap::new();
    for t in &clause.head {
        for v in t.vars() {
            *counts.entry(v).or_insert(0usize) += 1;
        }
    }
    clause.body.count_var_occurrences(&mut counts);
    let mut fresh = FreshVars::avoiding(names);

    let mut subst: HashMap<String, String> = HashMap::new();
    let mut head_vars = Vec::new();
    let mut pending = Vec::new();
    for (i, arg) in clause.head.iter().enumerate() {
        let v = fresh.fresh();
        let span = clause.head_spans.get(i).copied().unwrap_or(clause.span);
        match arg {
            Term::Var(x) if !subst.contains_key(x) => {
                subst.insert(x.clone(), v.clone());
            }
            _ => pending.push((v.clone(), arg.clone(), span)),
        }
        head_vars.push(v);
    }
    let rename = |t: &Term| t.rename_vars(&mut |x| subst.get(x).cloned().unwrap_or_else(|| x.to_string()));

    let mut seen: BTreeSet<String> = head_vars.iter().cloned().collect();
    let mut goals = Vec::new();
    for (v, arg, span) in pending {
        let arg = rename(&arg);
        let anon = |x: &str| x.starts_with('_') && counts.get(x).copied().unwrap_or(0) <= 1;
        flatten_head_unify(&v, &arg, span, &mut fresh, &mut seen, &anon, &mut goals);
    }
    let body = rename_goal(&clause.body, &rename);
    goals.extend(normalize_goal(&body, &mut fresh));
    Clause {
        head: head_vars.into_iter().map(Term::var).collect(),
        head_spans: clause.head_spans.clone(),
        body: finish_conj(goals, clause.body.span),
        span: clause.span,
    }
}

fn rename_goal(g: &Goal, rename: &impl Fn(&Term) -> Term) -> Goal {
    let kind = match &g.kind {
        GoalKind::Unify(a, b) => GoalKind::Unify(rename(a), rename(b)),
        GoalKind::Call(n, args) => GoalKind::Call(n.clone(), args.iter().map(rename).collect()),
        GoalKind::Conj(gs) => GoalKind::Conj(gs.iter().map(|g| rename_goal(g, rename)).collect()),
        GoalKind::Disj(gs) => GoalKind::Disj(gs.iter().map(|g| rename_goal(g, rename)).collect()),
        GoalKind::Not(g) => GoalKind::Not(Box::new(rename_goal(g, rename))),
        GoalKind::IfThenElse(c, t, e) => GoalKind::IfThenElse(
            Box::new(rename_goal(c, rename)),
            Box::new(rename_goal(t, rename)),
            Box::new(rename_goal(e, rename)),
        ),
        GoalKind::Log(l) => GoalKind::Log(l.clone()),
    };
    Goal::new(kind, g.span)
}

/// Head unifications give every repeated or anonymous variable inside the
/// argument its own fresh variable, so deconstruction never mixes with tests.
fn flatten_head_unify(
    v: &str,
    t: &Term,
    span: Span,
    fresh: &mut FreshVars,
    seen: &mut BTreeSet<String>,
    anon: &impl Fn(&str) -> bool,
    out: &mut Vec<Goal>,
) {
    match t {
        Term::Var(_) | Term::Int(_) => {
            for x in t.vars() {
                seen.insert(x);
            }
            out.push(Goal::unify(Term::var(v), t.clone(), span));
        }
        Term::Compound(f, args) => {
            let mut new_args = Vec::new();
            let mut posts: Vec<(String, Term)> = Vec::new();
            for a in args {
                match a {
                    Term::Var(x) if anon(x) => new_args.push(Term::var(fresh.fresh())),
                    Term::Var(x) if !seen.contains(x) => {
                        seen.insert(x.clone());
                        new_args.push(a.clone());
                    }
                    _ => {
                        let w = fresh.fresh();
                        new_args.push(Term::var(w.clone()));
                        posts.push((w, a.clone()));
                    }
                }
            }
            out.push(Goal::unify(Term::var(v), Term::compound(f.clone(), new_args), span));
            for (w, a) in posts {
                match a {
                    Term::Var(x) => out.push(Goal::unify(Term::var(x), Term::var(w), span)),
                    _ => flatten_head_unify(&w, &a, span, fresh, seen, anon, out),
                }
            }
        }
    }
}

/// Normalizes a goal into a sequence of conjuncts.
pub fn normalize_goal(g: &Goal, fresh: &mut FreshVars) -> Vec<Goal> {
    let span = g.span;
    let mut out = Vec::new();
    match &g.kind {
        GoalKind::Unify(a, b) => match (a, b) {
            (Term::Var(_), _) => flatten_unify(a, b, span, fresh, &mut out),
            (_, Term::Var(_)) => flatten_unify(b, a, span, fresh, &mut out),
            _ => {
                let w = Term::var(fresh.fresh());
                flatten_unify(&w, a, span, fresh, &mut out);
                flatten_unify(&w, b, span, fresh, &mut out);
            }
        },
        GoalKind::Call(name, args) => {
            let args = args.iter().map(|a| construct(a, span, fresh, &mut out)).collect();
            out.push(Goal::call(name.clone(), args, span));
        }
        GoalKind::Conj(gs) => {
            for c in gs {
                out.extend(normalize_goal(c, fresh));
            }
        }
        GoalKind::Disj(ds) => {
            let ds = ds
                .iter()
                .map(|d| finish_conj(normalize_goal(d, fresh), d.span))
                .collect();
            out.push(Goal::new(GoalKind::Disj(ds), span));
        }
        GoalKind::Not(inner) => {
            let inner = finish_conj(normalize_goal(inner, fresh), inner.span);
            out.push(Goal::new(GoalKind::Not(Box::new(inner)), span));
        }
        GoalKind::IfThenElse(c, t, e) => {
            let c = finish_conj(normalize_goal(c, fresh), c.span);
            let t = finish_conj(normalize_goal(t, fresh), t.span);
            let e = finish_conj(normalize_goal(e, fresh), e.span);
            out.push(Goal::new(
                GoalKind::IfThenElse(Box::new(c), Box::new(t), Box::new(e)),
                span,
            ));
        }
        GoalKind::Log(_) => out.push(g.clone()),
    }
    out
}

/// Drops redundant `true` goals and wraps the rest as one goal.
pub(crate) fn finish_conj(goals: Vec<Goal>, span: Span) -> Goal {
    let mut goals: Vec<Goal> = goals.into_iter().filter(|g| !g.is_true()).collect();
    if goals.is_empty() {
        goals.push(Goal::truth(span));
    }
    Goal::conj(goals, span)
}

/// `v = t` with `v` a variable, decomposed top-down.
fn flatten_unify(v: &Term, t: &Term, span: Span, fresh: &mut FreshVars, out: &mut Vec<Goal>) {
    match t {
        Term::Var(_) | Term::Int(_) => out.push(Goal::unify(v.clone(), t.clone(), span)),
        Term::Compound(f, args) => {
            let mut new_args = Vec::new();
            let mut posts = Vec::new();
            for a in args {
                if a.is_var() {
                    new_args.push(a.clone());
                } else {
                    let w = Term::var(fresh.fresh());
                    new_args.push(w.clone());
                    posts.push((w, a));
                }
            }
            out.push(Goal::unify(v.clone(), Term::compound(f.clone(), new_args), span));
            for (w, a) in posts {
                flatten_unify(&w, a, span, fresh, out);
            }
        }
    }
}

/// Replaces a call argument by a variable, constructing it bottom-up.
fn construct(t: &Term, span: Span, fresh: &mut FreshVars, out: &mut Vec<Goal>) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Int(_) => {
            let w = Term::var(fresh.fresh());
            out.push(Goal::unify(w.clone(), t.clone(), span));
            w
        }
        Term::Compound(f, args) => {
            let args = args.iter().map(|a| construct(a, span, fresh, out)).collect();
            let w = Term::var(fresh.fresh());
            out.push(Goal::unify(w.clone(), Term::compound(f.clone(), args), span));
            w
        }
    }
}

/// True when every unification is `X = Y`, `X = n` or `X = f(Y1..Yn)` and
/// every call has only variable arguments.
pub fn is_superhomogeneous(g: &Goal) -> bool {
    let mut ok = true;
    g.walk(&mut |g| match &g.kind {
        GoalKind::Unify(Term::Var(_), Term::Var(_) | Term::Int(_)) => {}
        GoalKind::Unify(Term::Var(_), Term::Compound(_, args)) => ok &= args.iter().all(Term::is_var),
        GoalKind::Unify(..) => ok = false,
        GoalKind::Call(_, args) => ok &= args.iter().all(Term::is_var),
        _ => {}
    });
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_goal, parse_program};

    fn clause_of(src: &str) -> Clause {
        let p = parse_program(src).unwrap();
        p.predicates.values().next().unwrap().clauses[0].clone()
    }

    #[test]
    fn member_fact_normal_form() {
        let c = normalize_clause(&clause_of("member(X, [X|_])."));
        assert_eq!(c.head, vec![Term::var("V1"), Term::var("V2")]);
        assert_eq!(c.body, parse_goal("V2 = '[|]'(V3, V4), V1 = V3").unwrap());
    }

    #[test]
    fn nested_call_arguments_are_built_bottom_up() {
        let src = "p(_).\nq :- p(f(g(X))).";
        let p = parse_program(src).unwrap();
        let c = normalize_clause(&p.predicates[1].clauses[0]);
        assert_eq!(c.body, parse_goal("V1 = g(X), V2 = f(V1), p(V2)").unwrap());
    }

    #[test]
    fn flat_body_is_kept() {
        let c = normalize_clause(&clause_of("p(A, B) :- A = f(C), B = C."));
        assert_eq!(c.body, parse_goal("V1 = f(C), V2 = C").unwrap());
    }

    #[test]
    fn fresh_names_avoid_clash() {
        let c = normalize_clause(&clause_of("p(V1) :- V1 = 3."));
        assert_eq!(c.head, vec![Term::var("V2")]);
        assert_eq!(c.body, parse_goal("V2 = 3").unwrap());
    }

    #[test]
    fn compound_on_both_sides() {
        let mut fresh = FreshVars::default();
        let g = normalize_goal(&parse_goal("f(X, 1) = f(2, Y)").unwrap(), &mut fresh);
        let got = Goal::conj(g, Span::default());
        assert_eq!(got, parse_goal("V1 = f(X, V2), V2 = 1, V1 = f(V3, Y), V3 = 2").unwrap());
        assert!(is_superhomogeneous(&got));
    }
}
