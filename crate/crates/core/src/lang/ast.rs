use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;

use super::term::{Span, Term, TypeExpr};
use crate::coverage::SwitchTree;

/// Instrumentation goals. They always succeed exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LogGoal {
    /// `log(N)`: increment counter N.
    Label(u32),
    /// `log_switch(S)`: emitted before switch S; logs the pre-switch batch if any.
    SwitchEntry(u32),
    /// `log_batch(S, Leaf)`: logs the batch planned for `Leaf` of switch S.
    Batch { switch: u32, leaf: u32 },
}

#[derive(Clone, Debug)]
pub enum GoalKind {
    Unify(Term, Term),
    Call(String, Vec<Term>),
    Conj(Vec<Goal>),
    Disj(Vec<Goal>),
    Not(Box<Goal>),
    IfThenElse(Box<Goal>, Box<Goal>, Box<Goal>),
    Log(LogGoal),
}

/// A goal with the source span it was parsed from (or derived from).
///
/// Equality is structural and ignores spans.
#[derive(Clone, Debug)]
pub struct Goal {
    pub kind: GoalKind,
    pub span: Span,
}

impl PartialEq for Goal {
    fn eq(&self, other: &Self) -> bool {
        use GoalKind::*;
        match (&self.kind, &other.kind) {
            (Unify(a, b), Unify(c, d)) => a == c && b == d,
            (Call(n, a), Call(m, b)) => n == m && a == b,
            (Conj(a), Conj(b)) | (Disj(a), Disj(b)) => a == b,
            (Not(a), Not(b)) => a == b,
            (IfThenElse(a, b, c), IfThenElse(d, e, f)) => a == d && b == e && c == f,
            (Log(a), Log(b)) => a == b,
            _ => false,
        }
    }
}

impl Goal {
    pub fn new(kind: GoalKind, span: Span) -> Goal {
        Goal { kind, span }
    }

    pub fn unify(lhs: Term, rhs: Term, span: Span) -> Goal {
        Goal::new(GoalKind::Unify(lhs, rhs), span)
    }

    pub fn call(name: impl Into<String>, args: Vec<Term>, span: Span) -> Goal {
        Goal::new(GoalKind::Call(name.into(), args), span)
    }

    pub fn truth(span: Span) -> Goal {
        Goal::call("true", vec![], span)
    }

    pub fn log(goal: LogGoal, span: Span) -> Goal {
        Goal::new(GoalKind::Log(goal), span)
    }

    /// Builds a conjunction, collapsing the single-goal case.
    pub fn conj(mut goals: Vec<Goal>, span: Span) -> Goal {
        if goals.len() == 1 {
            goals.pop().unwrap()
        } else {
            Goal::new(GoalKind::Conj(goals), span)
        }
    }

    /// The goal viewed as a sequence of conjuncts.
    pub fn conjuncts(&self) -> &[Goal] {
        match &self.kind {
            GoalKind::Conj(gs) => gs,
            _ => std::slice::from_ref(self),
        }
    }

    pub fn into_conjuncts(self) -> Vec<Goal> {
        match self.kind {
            GoalKind::Conj(gs) => gs,
            _ => vec![self],
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(&self.kind, GoalKind::Call(n, a) if n == "true" && a.is_empty())
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            GoalKind::Unify(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            GoalKind::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            GoalKind::Conj(gs) | GoalKind::Disj(gs) => gs.iter().for_each(|g| g.collect_vars(out)),
            GoalKind::Not(g) => g.collect_vars(out),
            GoalKind::IfThenElse(c, t, e) => {
                c.collect_vars(out);
                t.collect_vars(out);
                e.collect_vars(out);
            }
            GoalKind::Log(_) => {}
        }
    }

    /// Counts every variable occurrence (not deduplicated).
    pub fn count_var_occurrences(&self, counts: &mut BTreeMap<String, usize>) {
        fn term(t: &Term, counts: &mut BTreeMap<String, usize>) {
            match t {
                Term::Var(v) => *counts.entry(v.clone()).or_default() += 1,
                Term::Int(_) => {}
                Term::Compound(_, args) => args.iter().for_each(|a| term(a, counts)),
            }
        }
        match &self.kind {
            GoalKind::Unify(a, b) => {
                term(a, counts);
                term(b, counts);
            }
            GoalKind::Call(_, args) => args.iter().for_each(|a| term(a, counts)),
            GoalKind::Conj(gs) | GoalKind::Disj(gs) => gs.iter().for_each(|g| g.count_var_occurrences(counts)),
            GoalKind::Not(g) => g.count_var_occurrences(counts),
            GoalKind::IfThenElse(c, t, e) => {
                c.count_var_occurrences(counts);
                t.count_var_occurrences(counts);
                e.count_var_occurrences(counts);
            }
            GoalKind::Log(_) => {}
        }
    }

    /// Visits this goal and all sub-goals, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Goal)) {
        f(self);
        match &self.kind {
            GoalKind::Conj(gs) | GoalKind::Disj(gs) => gs.iter().for_each(|g| g.walk(f)),
            GoalKind::Not(g) => g.walk(f),
            GoalKind::IfThenElse(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            _ => {}
        }
    }

    pub fn contains_log(&self) -> bool {
        let mut found = false;
        self.walk(&mut |g| found |= matches!(g.kind, GoalKind::Log(_)));
        found
    }
}

/// Argument mode: ground at call (`in`) or free at call and ground on success (`out`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArgMode {
    In,
    Out,
}

impl fmt::Display for ArgMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArgMode::In => "in",
            ArgMode::Out => "out",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Determinism {
    Det,
    Semidet,
    Multi,
    Nondet,
}

impl Determinism {
    pub fn can_fail(self) -> bool {
        matches!(self, Determinism::Semidet | Determinism::Nondet)
    }

    pub fn at_most_one(self) -> bool {
        matches!(self, Determinism::Det | Determinism::Semidet)
    }
}

impl fmt::Display for Determinism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Determinism::Det => "det",
            Determinism::Semidet => "semidet",
            Determinism::Multi => "multi",
            Determinism::Nondet => "nondet",
        })
    }
}

impl FromStr for Determinism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "det" => Ok(Determinism::Det),
            "semidet" => Ok(Determinism::Semidet),
            "multi" => Ok(Determinism::Multi),
            "nondet" => Ok(Determinism::Nondet),
            other => Err(format!("unknown determinism `{}`", other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeDecl {
    pub arg_modes: Vec<ArgMode>,
    pub determinism: Determinism,
}

impl ModeDecl {
    pub fn new(arg_modes: Vec<ArgMode>, determinism: Determinism) -> Self {
        ModeDecl { arg_modes, determinism }
    }

    pub fn input_count(&self) -> usize {
        self.arg_modes.iter().filter(|m| **m == ArgMode::In).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredKey {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Vec<Term>,
    /// Source span of each head argument.
    pub head_spans: Vec<Span>,
    pub body: Goal,
    pub span: Span,
}

impl PartialEq for Clause {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_true()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateDef {
    pub name: String,
    pub arity: usize,
    pub clauses: Vec<Clause>,
    pub modes: Vec<ModeDecl>,
    pub type_sig: Option<Vec<TypeExpr>>,
}

impl PredicateDef {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredicateDef {
            name: name.into(),
            arity,
            clauses: Vec::new(),
            modes: Vec::new(),
            type_sig: None,
        }
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(self.name.clone(), self.arity)
    }
}

/// `:- type name(Params) ---> ctor1 ; ctor2 ...`
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDef {
    pub name: String,
    pub params: Vec<String>,
    pub constructors: Vec<(String, Vec<TypeExpr>)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub type_defs: IndexMap<String, TypeDef>,
    pub predicates: IndexMap<PredKey, PredicateDef>,
    /// Switch trees declared by instrumented programs, keyed by switch id.
    pub switches: BTreeMap<u32, SwitchTree>,
}

impl Program {
    pub fn predicate(&self, name: &str, arity: usize) -> Option<&PredicateDef> {
        self.predicates.get(&PredKey::new(name, arity))
    }

    /// True when any clause body carries instrumentation goals.
    pub fn is_instrumented(&self) -> bool {
        !self.switches.is_empty()
            || self
                .predicates
                .values()
                .any(|p| p.clauses.iter().any(|c| c.body.contains_log()))
    }
}
