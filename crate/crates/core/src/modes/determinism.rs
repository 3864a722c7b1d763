use std::collections::BTreeSet;
use std::fmt;

use super::procedure::Procedure;
use crate::coverage::detect_switch;
use crate::lang::{ArgMode, Goal, GoalKind, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub proc: String,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.proc, self.span, self.message)
    }
}

/// Every disjunction of a det or semidet procedure must be a switch.
/// Disjunctions inside negations and if-then-else conditions are exempt.
pub fn check_determinism(procs: &[Procedure]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for p in procs.iter().filter(|p| p.determinism.at_most_one()) {
        for c in &p.clauses {
            let bound = c
                .head
                .iter()
                .zip(&p.arg_modes)
                .filter(|(_, m)| **m == ArgMode::In)
                .map(|(v, _)| v.clone())
                .collect();
            walk(p, &c.body, bound, false, &mut out);
        }
    }
    out
}

fn walk(
    p: &Procedure,
    g: &Goal,
    mut bound: BTreeSet<String>,
    in_cond: bool,
    out: &mut Vec<Diagnostic>,
) -> BTreeSet<String> {
    match &g.kind {
        GoalKind::Unify(a, b) => {
            bound.extend(a.vars());
            bound.extend(b.vars());
            bound
        }
        GoalKind::Call(_, args) => {
            for a in args {
                bound.extend(a.vars());
            }
            bound
        }
        GoalKind::Log(_) => bound,
        GoalKind::Conj(gs) => gs.iter().fold(bound, |b, g| walk(p, g, b, in_cond, out)),
        GoalKind::Disj(ds) => {
            if !in_cond && detect_switch(ds, &bound).is_none() {
                out.push(Diagnostic {
                    proc: p.name.clone(),
                    span: g.span,
                    message: format!("regular disjunction in {} procedure", p.determinism),
                });
            }
            let mut after: Option<BTreeSet<String>> = None;
            for d in ds {
                let b = walk(p, d, bound.clone(), in_cond, out);
                after = Some(match after {
                    None => b,
                    Some(a) => a.intersection(&b).cloned().collect(),
                });
            }
            after.unwrap_or(bound)
        }
        GoalKind::Not(inner) => {
            walk(p, inner, bound.clone(), true, out);
            bound
        }
        GoalKind::IfThenElse(c, t, e) => {
            let cb = walk(p, c, bound.clone(), true, out);
            let tb = walk(p, t, cb, in_cond, out);
            let eb = walk(p, e, bound, in_cond, out);
            tb.intersection(&eb).cloned().collect()
        }
    }
}
