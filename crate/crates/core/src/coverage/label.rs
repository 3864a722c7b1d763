//! Labelled superhomogeneous form: a label at the start and end of every
//! conjunction and between any two of its goals. Labels are numbered densely
//! in textual order: the label before a goal, then the goal's own labels,
//! then the label after it.

use std::collections::BTreeSet;

use super::meta::{ConstructKind, CounterMeta, MetaEntry};
use super::switch::{detect_switch, SwitchNode, SwitchShape, SwitchTree};
use crate::lang::{ArgMode, Goal, GoalKind, LogGoal, Span, Term};
use crate::modes::{ProcClause, Procedure};

/// A conjunction with `goals.len() + 1` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LConj {
    pub labels: Vec<u32>,
    pub goals: Vec<LGoal>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LGoalKind {
    /// A unification or call.
    Atom(Goal),
    Disj {
        disjuncts: Vec<LConj>,
        /// Id of the switch tree rooted here.
        switch: Option<u32>,
        /// Part of an enclosing switch's tree.
        absorbed: bool,
    },
    Not(LConj),
    Ite(LConj, LConj, LConj),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LGoal {
    pub kind: LGoalKind,
    pub span: Span,
}

impl LConj {
    pub fn first(&self) -> u32 {
        self.labels[0]
    }

    pub fn last(&self) -> u32 {
        *self.labels.last().unwrap()
    }

    /// The conjunction without labels.
    pub fn to_goal(&self) -> Goal {
        Goal::conj(self.goals.iter().map(LGoal::to_goal).collect(), self.span)
    }
}

impl LGoal {
    pub fn to_goal(&self) -> Goal {
        let kind = match &self.kind {
            LGoalKind::Atom(g) => return g.clone(),
            LGoalKind::Disj { disjuncts, .. } => GoalKind::Disj(disjuncts.iter().map(LConj::to_goal).collect()),
            LGoalKind::Not(c) => GoalKind::Not(Box::new(c.to_goal())),
            LGoalKind::Ite(c, t, e) => {
                GoalKind::IfThenElse(Box::new(c.to_goal()), Box::new(t.to_goal()), Box::new(e.to_goal()))
            }
        };
        Goal::new(kind, self.span)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledClause {
    pub head: Vec<String>,
    pub body: LConj,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledProcedure {
    pub proc: Procedure,
    pub clauses: Vec<LabelledClause>,
    /// The procedure's counter pair. For a single clause these are the first
    /// and last labels of its body; otherwise they are labels of their own.
    pub enter: u32,
    pub exit: u32,
}

impl LabelledProcedure {
    pub fn has_own_pair(&self) -> bool {
        self.clauses.len() != 1
    }
}

/// Assigns labels and records counter metadata.
#[derive(Debug, Default)]
pub struct Labeller {
    next: u32,
    pub meta: CounterMeta,
    proc: String,
}

impl Labeller {
    pub fn new() -> Labeller {
        Labeller::default()
    }

    fn fresh(&mut self) -> u32 {
        self.next += 1;
        self.meta.label_count = self.next;
        self.next
    }

    fn entry(&mut self, enter: u32, exit: u32, kind: ConstructKind, span: Span) -> usize {
        self.meta.entries.push(MetaEntry {
            enter,
            exit,
            kind,
            proc: self.proc.clone(),
            span,
            in_condition: false,
        });
        self.meta.entries.len() - 1
    }

    pub fn procedure(&mut self, proc: &Procedure) -> LabelledProcedure {
        self.proc = proc.name.clone();
        let span = proc
            .clauses
            .iter()
            .map(|c| c.span)
            .reduce(Span::join)
            .unwrap_or_default();
        let slot = self.entry(0, 0, ConstructKind::Procedure, span);
        let own_pair = proc.clauses.len() != 1;
        let enter = if own_pair { self.fresh() } else { 0 };
        let clauses: Vec<LabelledClause> = proc
            .clauses
            .iter()
            .map(|c| LabelledClause {
                head: c.head.clone(),
                body: self.conj(&c.body),
                span: c.span,
            })
            .collect();
        let (enter, exit) = if own_pair {
            (enter, self.fresh())
        } else {
            (clauses[0].body.first(), clauses[0].body.last())
        };
        self.meta.entries[slot].enter = enter;
        self.meta.entries[slot].exit = exit;
        LabelledProcedure {
            proc: proc.clone(),
            clauses,
            enter,
            exit,
        }
    }

    pub fn conj(&mut self, g: &Goal) -> LConj {
        let mut labels = vec![self.fresh()];
        let mut goals = Vec::new();
        let mut flat = Vec::new();
        flatten(g, &mut flat);
        for c in flat {
            let before = *labels.last().unwrap();
            let (lg, kind) = self.goal(c);
            let after = self.fresh();
            self.entry(before, after, kind, c.span);
            labels.push(after);
            goals.push(lg);
        }
        LConj {
            labels,
            goals,
            span: g.span,
        }
    }

    /// Labels the disjuncts of a disjunction on their own.
    pub fn disjuncts(&mut self, ds: &[Goal]) -> Vec<LConj> {
        ds.iter().map(|d| self.conj(d)).collect()
    }

    fn goal(&mut self, g: &Goal) -> (LGoal, ConstructKind) {
        let span = g.span;
        let (kind, ck) = match &g.kind {
            GoalKind::Unify(..) | GoalKind::Call(..) | GoalKind::Conj(_) => {
                (LGoalKind::Atom(g.clone()), ConstructKind::Goal)
            }
            GoalKind::Disj(ds) => (
                LGoalKind::Disj {
                    disjuncts: self.disjuncts(ds),
                    switch: None,
                    absorbed: false,
                },
                ConstructKind::Disjunction,
            ),
            GoalKind::Not(inner) => (LGoalKind::Not(self.conj(inner)), ConstructKind::Negation),
            GoalKind::IfThenElse(c, t, e) => {
                let c = self.conj(c);
                let t = self.conj(t);
                let e = self.conj(e);
                (LGoalKind::Ite(c, t, e), ConstructKind::IfThenElse)
            }
            GoalKind::Log(_) => (LGoalKind::Atom(g.clone()), ConstructKind::Goal),
        };
        (LGoal { kind, span }, ck)
    }
}

fn flatten<'g>(g: &'g Goal, out: &mut Vec<&'g Goal>) {
    match &g.kind {
        GoalKind::Conj(gs) => gs.iter().for_each(|c| flatten(c, out)),
        _ => out.push(g),
    }
}

/// Labels procedures in order, then finds the switches.
pub fn label_program(procs: &[Procedure]) -> (Vec<LabelledProcedure>, CounterMeta, Vec<SwitchTree>) {
    let mut labeller = Labeller::new();
    let mut labelled: Vec<LabelledProcedure> = procs.iter().map(|p| labeller.procedure(p)).collect();
    let mut meta = labeller.meta;
    let mut switches = Vec::new();
    for lp in &mut labelled {
        let modes = lp.proc.arg_modes.clone();
        for c in &mut lp.clauses {
            let bound = c
                .head
                .iter()
                .zip(&modes)
                .filter(|(_, m)| **m == ArgMode::In)
                .map(|(v, _)| v.clone())
                .collect();
            find_switches(&mut c.body, bound, false, &mut switches, &mut meta);
        }
    }
    (labelled, meta, switches)
}

fn set_kind(meta: &mut CounterMeta, enter: u32, exit: u32, f: impl FnOnce(&mut MetaEntry)) {
    if let Some(e) = meta.entries.iter_mut().find(|e| {
        e.enter == enter && e.exit == exit && matches!(e.kind, ConstructKind::Disjunction | ConstructKind::Switch)
    }) {
        f(e);
    }
}

fn find_switches(
    c: &mut LConj,
    mut bound: BTreeSet<String>,
    in_cond: bool,
    switches: &mut Vec<SwitchTree>,
    meta: &mut CounterMeta,
) -> BTreeSet<String> {
    for i in 0..c.goals.len() {
        let (before, after) = (c.labels[i], c.labels[i + 1]);
        let g = &mut c.goals[i];
        bound = match &mut g.kind {
            LGoalKind::Atom(a) => {
                let mut b = bound;
                b.extend(a.vars());
                b
            }
            LGoalKind::Disj {
                disjuncts,
                switch,
                absorbed,
            } => {
                if !*absorbed {
                    let plain: Vec<Goal> = disjuncts.iter().map(LConj::to_goal).collect();
                    if let Some(shape) = detect_switch(&plain, &bound) {
                        if in_cond {
                            set_kind(meta, before, after, |e| e.in_condition = true);
                        } else {
                            let id = switches.len() as u32 + 1;
                            let mut tree = SwitchTree {
                                id,
                                entry_vars: Vec::new(),
                                nodes: Vec::new(),
                                leaves: Vec::new(),
                            };
                            build_tree(&shape, disjuncts, None, &mut tree, meta);
                            let mut edge_vars = Vec::new();
                            for n in &tree.nodes {
                                if let Some((a, b)) = &n.edge {
                                    a.collect_vars(&mut edge_vars);
                                    b.collect_vars(&mut edge_vars);
                                }
                            }
                            tree.entry_vars = edge_vars.into_iter().filter(|v| bound.contains(v)).collect();
                            switches.push(tree);
                            *switch = Some(id);
                            set_kind(meta, before, after, |e| e.kind = ConstructKind::Switch);
                        }
                    }
                }
                let mut common: Option<BTreeSet<String>> = None;
                for d in disjuncts.iter_mut() {
                    let b = find_switches(d, bound.clone(), in_cond, switches, meta);
                    common = Some(match common {
                        None => b,
                        Some(x) => x.intersection(&b).cloned().collect(),
                    });
                }
                common.unwrap_or(bound)
            }
            LGoalKind::Not(inner) => {
                find_switches(inner, bound.clone(), true, switches, meta);
                bound
            }
            LGoalKind::Ite(cnd, t, e) => {
                let cb = find_switches(cnd, bound.clone(), true, switches, meta);
                let tb = find_switches(t, cb, in_cond, switches, meta);
                let eb = find_switches(e, bound, in_cond, switches, meta);
                tb.intersection(&eb).cloned().collect()
            }
        };
    }
    bound
}

fn build_tree(
    shape: &SwitchShape,
    disjuncts: &mut [LConj],
    parent: Option<u32>,
    tree: &mut SwitchTree,
    meta: &mut CounterMeta,
) {
    for (branch, d) in shape.branches.iter().zip(disjuncts.iter_mut()) {
        tree.nodes.push(SwitchNode {
            label: d.labels[0],
            parent,
            edge: None,
        });
        for j in 0..branch.prefix {
            let LGoalKind::Atom(Goal {
                kind: GoalKind::Unify(a, b),
                ..
            }) = &d.goals[j].kind
            else {
                unreachable!("switch prefixes consist of unifications")
            };
            tree.nodes.push(SwitchNode {
                label: d.labels[j + 1],
                parent: Some(d.labels[j]),
                edge: Some((a.clone(), b.clone())),
            });
        }
        let at = d.labels[branch.prefix];
        match &branch.nested {
            Some(inner) => {
                let (before, after) = (d.labels[branch.prefix], d.labels[branch.prefix + 1]);
                let LGoalKind::Disj {
                    disjuncts, absorbed, ..
                } = &mut d.goals[branch.prefix].kind
                else {
                    unreachable!("nested switch is a disjunction")
                };
                *absorbed = true;
                set_kind(meta, before, after, |e| e.kind = ConstructKind::Switch);
                build_tree(inner, disjuncts, Some(at), tree, meta);
            }
            None => tree.leaves.push(at),
        }
    }
}

/// The procedure with a `log` goal at every label.
pub fn naive_instrument(lp: &LabelledProcedure) -> Vec<Procedure> {
    instrument_with(lp, &|c| naive_conj(c))
}

fn naive_conj(c: &LConj) -> Goal {
    let mut out = vec![Goal::log(LogGoal::Label(c.labels[0]), c.span)];
    for (g, l) in c.goals.iter().zip(&c.labels[1..]) {
        out.push(naive_goal(g));
        out.push(Goal::log(LogGoal::Label(*l), g.span));
    }
    Goal::conj(out, c.span)
}

fn naive_goal(g: &LGoal) -> Goal {
    let kind = match &g.kind {
        LGoalKind::Atom(a) => return a.clone(),
        LGoalKind::Disj { disjuncts, .. } => GoalKind::Disj(disjuncts.iter().map(naive_conj).collect()),
        LGoalKind::Not(c) => GoalKind::Not(Box::new(naive_conj(c))),
        LGoalKind::Ite(c, t, e) => GoalKind::IfThenElse(
            Box::new(naive_conj(c)),
            Box::new(naive_conj(t)),
            Box::new(naive_conj(e)),
        ),
    };
    Goal::new(kind, g.span)
}

/// Name of the helper procedure holding the clauses of a multi-clause procedure.
pub fn clauses_proc_name(name: &str) -> String {
    format!("{}__clauses", name)
}

/// Builds the instrumented procedure(s) for `lp` given a body transformer.
/// A procedure without exactly one clause becomes a wrapper logging its own
/// counter pair around a call to a helper that holds the clauses.
pub(crate) fn instrument_with(lp: &LabelledProcedure, body: &dyn Fn(&LConj) -> Goal) -> Vec<Procedure> {
    let p = &lp.proc;
    let clauses: Vec<ProcClause> = lp
        .clauses
        .iter()
        .map(|c| ProcClause {
            head: c.head.clone(),
            body: body(&c.body),
            span: c.span,
        })
        .collect();
    if !lp.has_own_pair() {
        return vec![Procedure { clauses, ..p.clone() }];
    }
    let span = lp.clauses.iter().map(|c| c.span).reduce(Span::join).unwrap_or_default();
    let head: Vec<String> = (1..=p.arity()).map(|i| format!("V{}", i)).collect();
    let helper = clauses_proc_name(&p.name);
    let wrapper_body = Goal::conj(
        vec![
            Goal::log(LogGoal::Label(lp.enter), span),
            Goal::call(
                helper.clone(),
                head.iter().map(|v| Term::var(v.clone())).collect(),
                span,
            ),
            Goal::log(LogGoal::Label(lp.exit), span),
        ],
        span,
    );
    vec![
        Procedure {
            clauses: vec![ProcClause {
                head,
                body: wrapper_body,
                span,
            }],
            ..p.clone()
        },
        Procedure {
            name: helper,
            origin: None,
            clauses,
            ..p.clone()
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_goal;

    /// The reference-manual switch on X.
    pub(crate) const SWITCH: &str = "(
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
    )";

    #[test]
    fn switch_example_gets_fourteen_labels_in_textual_order() {
        let GoalKind::Disj(ds) = parse_goal(SWITCH).unwrap().kind else {
            panic!()
        };
        let mut l = Labeller::new();
        let lc = l.disjuncts(&ds);
        assert_eq!(l.meta.label_count, 14);
        assert_eq!(lc[0].labels, vec![1, 2, 3]);
        assert_eq!(lc[1].labels, vec![4, 5, 13, 14]);
        let LGoalKind::Disj { disjuncts: inner, .. } = &lc[1].goals[1].kind else {
            panic!()
        };
        assert_eq!(inner[0].labels, vec![6, 7, 8]);
        assert_eq!(inner[1].labels, vec![9, 10, 11, 12]);
    }

    #[test]
    fn switch_example_tree() {
        let GoalKind::Disj(ds) = parse_goal(SWITCH).unwrap().kind else {
            panic!()
        };
        let mut l = Labeller::new();
        let mut lc = l.disjuncts(&ds);
        let plain: Vec<Goal> = lc.iter().map(LConj::to_goal).collect();
        let shape = detect_switch(&plain, &BTreeSet::from(["X".to_string()])).unwrap();
        assert_eq!(shape.var, "X");
        let mut tree = SwitchTree {
            id: 1,
            entry_vars: vec![],
            nodes: vec![],
            leaves: vec![],
        };
        build_tree(&shape, &mut lc, None, &mut tree, &mut l.meta);
        assert_eq!(tree.simplified_execution_path(), vec![1, 2, 4, 5, 6, 7, 8, 9, 10, 11]);
        assert_eq!(tree.leaves, vec![2, 8, 11]);
    }

    #[test]
    fn single_goal_body_has_two_labels_forming_the_procedure_pair() {
        let proc = Procedure {
            name: "p".into(),
            origin: None,
            arg_modes: vec![],
            determinism: crate::lang::Determinism::Det,
            clauses: vec![ProcClause {
                head: vec![],
                body: parse_goal("true").unwrap(),
                span: Span::default(),
            }],
            type_sig: None,
        };
        let (lp, meta, _) = label_program(&[proc]);
        assert_eq!(meta.label_count, 2);
        assert_eq!((lp[0].enter, lp[0].exit), (1, 2));
        let kinds: Vec<ConstructKind> = meta.entries.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ConstructKind::Procedure, ConstructKind::Goal]);
    }
}
