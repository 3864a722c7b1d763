//! Shared test support: a random generator of small moded programs and an
//! independent SLD interpreter over source programs.

#![allow(dead_code)]

use std::collections::HashMap;

use mtest_core::lang::{Clause, Goal, GoalKind, Program, Term};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Generator

const SYMS: [(&str, usize); 6] = [("a", 0), ("b", 0), ("c", 0), ("f", 1), ("g", 1), ("h", 2)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Det,
    Semidet,
    Nondet,
}

impl Kind {
    fn decl(self) -> &'static str {
        match self {
            Kind::Det => "det",
            Kind::Semidet => "semidet",
            Kind::Nondet => "nondet",
        }
    }
}

/// A generated program with the queries to run against it.
#[derive(Clone, Debug)]
pub struct Generated {
    pub source: String,
    pub queries: Vec<String>,
    pub kinds: Vec<Kind>,
}

pub struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    fresh: usize,
    kinds: Vec<Kind>,
    me: usize,
}

/// Context of the conjunction being generated.
#[derive(Clone, Copy)]
struct Ctx {
    /// Only det goals and switches.
    semidet: bool,
    depth: usize,
}

fn join(goals: &[String]) -> String {
    goals.join(", ")
}

impl<'r, R: Rng> Gen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        Gen {
            rng,
            fresh: 0,
            kinds: Vec::new(),
            me: 0,
        }
    }

    fn var(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{}{}", prefix, self.fresh)
    }

    fn pick<'a>(&mut self, vs: &'a [String]) -> &'a String {
        &vs[self.rng.gen_range(0..vs.len())]
    }

    /// `Var = sym(Fresh...)`, returning the goal and the new variables.
    fn pattern(&mut self, var: &str, sym: (&str, usize)) -> (String, Vec<String>) {
        let args: Vec<String> = (0..sym.1).map(|_| self.var("A")).collect();
        let goal = if args.is_empty() {
            format!("{} = {}", var, sym.0)
        } else {
            format!("{} = {}({})", var, sym.0, args.join(", "))
        };
        (goal, args)
    }

    fn term_over(&mut self, bound: &[String]) -> String {
        let x = self.pick(bound).clone();
        match self.rng.gen_range(0..5) {
            0 => "a".to_string(),
            1 => x,
            2 => format!("f({})", x),
            3 => format!("g({})", x),
            _ => {
                let y = self.pick(bound).clone();
                format!("h({}, {})", x, y)
            }
        }
    }

    fn callees(&self, semidet: bool) -> Vec<usize> {
        (self.me + 1..self.kinds.len())
            .filter(|j| !semidet || self.kinds[*j] != Kind::Nondet)
            .collect()
    }

    /// Goals ending with `out` bound.
    fn conj(&mut self, ctx: Ctx, bound: &mut Vec<String>, out: &str) -> Vec<String> {
        let mut goals = Vec::new();
        let n = self.rng.gen_range(0..=2);
        for _ in 0..n {
            let g = self.goal(ctx, bound);
            goals.push(g);
        }
        let t = self.term_over(bound);
        goals.push(format!("{} = {}", out, t));
        bound.push(out.to_string());
        goals
    }

    fn goal(&mut self, ctx: Ctx, bound: &mut Vec<String>) -> String {
        let callees = self.callees(ctx.semidet);
        loop {
            let choice = self.rng.gen_range(0..8);
            match choice {
                0 => {
                    let x = self.pick(bound).clone();
                    let z = self.var("C");
                    let g = format!("{} = f({})", z, x);
                    bound.push(z);
                    return g;
                }
                1 if !ctx.semidet => {
                    let x = self.pick(bound).clone();
                    let sym = *SYMS.choose(self.rng).unwrap();
                    let (g, args) = self.pattern(&x, sym);
                    bound.extend(args);
                    return g;
                }
                2 if !callees.is_empty() => {
                    let j = *callees.choose(self.rng).unwrap();
                    let x = self.pick(bound).clone();
                    let z = self.var("R");
                    bound.push(z.clone());
                    return format!("p{}({}, {})", j, x, z);
                }
                3 | 4 if ctx.depth > 0 => return self.switch(ctx, bound),
                5 if ctx.depth > 0 && !ctx.semidet => {
                    let r = self.var("D");
                    let k = self.rng.gen_range(2..=3);
                    let inner = Ctx {
                        depth: ctx.depth - 1,
                        ..ctx
                    };
                    let ds: Vec<String> = (0..k)
                        .map(|_| join(&self.conj(inner, &mut bound.clone(), &r)))
                        .collect();
                    bound.push(r);
                    return format!("(\n{}\n)", ds.join("\n;\n"));
                }
                6 => {
                    let x = self.pick(bound).clone();
                    let inner = match callees.choose(self.rng) {
                        Some(j) if self.rng.gen_bool(0.5) => {
                            let w = self.var("W");
                            format!("p{}({}, {})", j, x, w)
                        }
                        _ => format!("{} = {}", x, SYMS[self.rng.gen_range(0..3)].0),
                    };
                    return format!("not({})", inner);
                }
                7 if ctx.depth > 0 => {
                    let x = self.pick(bound).clone();
                    let sym = *SYMS.choose(self.rng).unwrap();
                    let (cond, args) = self.pattern(&x, sym);
                    let r = self.var("I");
                    let inner = Ctx {
                        depth: ctx.depth - 1,
                        ..ctx
                    };
                    let mut tb = bound.clone();
                    tb.extend(args);
                    let then = join(&self.conj(inner, &mut tb, &r));
                    let els = join(&self.conj(inner, &mut bound.clone(), &r));
                    bound.push(r);
                    return format!("(if {} then {} else {})", cond, then, els);
                }
                _ => continue,
            }
        }
    }

    /// A switch on a bound variable, sometimes through an alias and with a
    /// nested switch on the same variable.
    fn switch(&mut self, ctx: Ctx, bound: &mut Vec<String>) -> String {
        let x = self.pick(bound).clone();
        let mut syms = SYMS.to_vec();
        syms.shuffle(self.rng);
        let k = self.rng.gen_range(2..=3);
        let nest = ctx.depth >= 2 && self.rng.gen_bool(0.3);
        let r = self.var("S");
        let inner = Ctx {
            depth: ctx.depth - 1,
            ..ctx
        };
        let mut ds = Vec::new();
        let mut used = 0;
        for i in 0..k {
            let mut b = bound.clone();
            let mut goals = Vec::new();
            let mut y = x.clone();
            if self.rng.gen_bool(0.3) {
                y = self.var("Y");
                goals.push(format!("{} = {}", y, x));
                b.push(y.clone());
            }
            if nest && i == k - 1 {
                let r2 = self.var("N");
                let mut nds = Vec::new();
                for _ in 0..2 {
                    let mut nb = b.clone();
                    let (t, args) = self.pattern(&y, syms[used]);
                    used += 1;
                    nb.extend(args);
                    let inner2 = Ctx {
                        depth: inner.depth.saturating_sub(1),
                        ..inner
                    };
                    let mut ng = vec![t];
                    ng.extend(self.conj(inner2, &mut nb, &r2));
                    nds.push(join(&ng));
                }
                goals.push(format!("(\n{}\n)", nds.join("\n;\n")));
                b.push(r2);
            } else {
                let (t, args) = self.pattern(&y, syms[used]);
                used += 1;
                goals.push(t);
                b.extend(args);
            }
            goals.extend(self.conj(inner, &mut b, &r));
            ds.push(join(&goals));
        }
        bound.push(r);
        format!("(\n{}\n)", ds.join("\n;\n"))
    }

    fn clause(&mut self, i: usize) -> String {
        let kind = self.kinds[i];
        let mut bound = vec!["In".to_string()];
        let body = match kind {
            Kind::Det => {
                let callees: Vec<usize> = (i + 1..self.kinds.len())
                    .filter(|j| self.kinds[*j] == Kind::Det)
                    .collect();
                match callees.choose(self.rng) {
                    Some(j) if self.rng.gen_bool(0.6) => {
                        let t = self.term_over(&["In".to_string(), "T".to_string()]);
                        format!("p{}(In, T), Out = {}", j, t)
                    }
                    _ => format!("Out = {}", self.term_over(&bound)),
                }
            }
            Kind::Semidet => {
                let ctx = Ctx {
                    semidet: true,
                    depth: self.rng.gen_range(1..=3),
                };
                let s = self.switch(ctx, &mut bound);
                let t = self.term_over(&bound);
                format!("{}, Out = {}", s, t)
            }
            Kind::Nondet => {
                let ctx = Ctx {
                    semidet: false,
                    depth: self.rng.gen_range(0..=3),
                };
                join(&self.conj(ctx, &mut bound, "Out"))
            }
        };
        format!("p{}(In, Out) :-\n{}.\n", i, body)
    }

    fn ground(&mut self, depth: usize) -> String {
        let (name, arity) = if depth == 0 {
            SYMS[self.rng.gen_range(0..3)]
        } else {
            *SYMS.choose(self.rng).unwrap()
        };
        if arity == 0 {
            name.to_string()
        } else {
            let args: Vec<String> = (0..arity).map(|_| self.ground(depth - 1)).collect();
            format!("{}({})", name, args.join(", "))
        }
    }

    /// A program of one to four predicates `pI(in, out)`, each calling only
    /// predicates with a higher index.
    pub fn program(&mut self) -> Generated {
        let n = self.rng.gen_range(1..=4);
        self.kinds = (0..n)
            .map(|_| match self.rng.gen_range(0..5) {
                0 => Kind::Det,
                1 | 2 => Kind::Semidet,
                _ => Kind::Nondet,
            })
            .collect();
        let mut source = String::new();
        for i in 0..n {
            self.me = i;
            source.push_str(&format!(":- mode p{}(in, out) is {}.\n", i, self.kinds[i].decl()));
            let clauses = if self.kinds[i] == Kind::Nondet {
                self.rng.gen_range(1..=2)
            } else {
                1
            };
            for _ in 0..clauses {
                source.push_str(&self.clause(i));
            }
            source.push('\n');
        }
        let queries = (0..4)
            .map(|_| {
                let i = self.rng.gen_range(0..n);
                let d = self.rng.gen_range(0..=2);
                format!("p{}({}, Out)", i, self.ground(d))
            })
            .collect();
        Generated {
            source,
            queries,
            kinds: self.kinds.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// SLD oracle

type Subst = HashMap<String, Term>;

fn walk(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(u) => walk(u, s),
            None => t.clone(),
        },
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| walk(a, s)).collect()),
        Term::Int(_) => t.clone(),
    }
}

fn occurs(v: &str, t: &Term) -> bool {
    match t {
        Term::Var(w) => v == w,
        Term::Compound(_, args) => args.iter().any(|a| occurs(v, a)),
        Term::Int(_) => false,
    }
}

fn unify(a: &Term, b: &Term, s: &Subst) -> Option<Subst> {
    let (a, b) = (walk(a, s), walk(b, s));
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => Some(s.clone()),
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if occurs(x, t) {
                return None;
            }
            let mut s2 = s.clone();
            s2.insert(x.clone(), t.clone());
            Some(s2)
        }
        (Term::Int(i), Term::Int(j)) => (i == j).then(|| s.clone()),
        (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            let mut s2 = s.clone();
            for (x, y) in xs.iter().zip(ys) {
                s2 = unify(x, y, &s2)?;
            }
            Some(s2)
        }
        _ => None,
    }
}

/// Plain SLD resolution, clause order and left to right, over the source
/// clauses. Knows no builtins beyond `true`, `fail` and `=`.
pub struct Sld<'p> {
    program: &'p Program,
    counter: std::cell::Cell<usize>,
}

impl<'p> Sld<'p> {
    pub fn new(program: &'p Program) -> Self {
        Sld {
            program,
            counter: std::cell::Cell::new(0),
        }
    }

    fn rename(&self, c: &Clause) -> Clause {
        let n = self.counter.get() + 1;
        self.counter.set(n);
        Clause {
            head: c
                .head
                .iter()
                .map(|t| t.rename_vars(&mut |v| format!("{}_{}", v, n)))
                .collect(),
            head_spans: c.head_spans.clone(),
            body: rename_goal(&c.body, n),
            span: c.span,
        }
    }

    pub fn solve(&self, g: &Goal, s: &Subst) -> Vec<Subst> {
        match &g.kind {
            GoalKind::Unify(a, b) => unify(a, b, s).into_iter().collect(),
            GoalKind::Call(name, args) => match (name.as_str(), args.len()) {
                ("true", 0) => vec![s.clone()],
                ("fail", 0) => vec![],
                _ => {
                    let pred = self.program.predicate(name, args.len()).expect("defined predicate");
                    let mut out = Vec::new();
                    for c in &pred.clauses {
                        let c = self.rename(c);
                        let mut s2 = Some(s.clone());
                        for (h, a) in c.head.iter().zip(args) {
                            s2 = s2.and_then(|s2| unify(h, a, &s2));
                        }
                        if let Some(s2) = s2 {
                            out.extend(self.solve(&c.body, &s2));
                        }
                    }
                    out
                }
            },
            GoalKind::Conj(gs) => {
                let mut states = vec![s.clone()];
                for g in gs {
                    states = states.iter().flat_map(|st| self.solve(g, st)).collect();
                }
                states
            }
            GoalKind::Disj(ds) => ds.iter().flat_map(|d| self.solve(d, s)).collect(),
            GoalKind::Not(inner) => {
                if self.solve(inner, s).is_empty() {
                    vec![s.clone()]
                } else {
                    vec![]
                }
            }
            GoalKind::IfThenElse(c, t, e) => match self.solve(c, s).into_iter().next() {
                Some(s2) => self.solve(t, &s2),
                None => self.solve(e, s),
            },
            GoalKind::Log(_) => vec![s.clone()],
        }
    }

    /// Solutions of `query` as sorted `Var = value` strings over its variables.
    pub fn answers(&self, query: &Goal) -> Vec<String> {
        let vars = query.vars();
        let mut out: Vec<String> = self
            .solve(query, &Subst::new())
            .iter()
            .map(|s| {
                vars.iter()
                    .map(|v| format!("{} = {}", v, walk(&Term::var(v.clone()), s)))
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .collect();
        out.sort();
        out
    }
}

fn rename_goal(g: &Goal, n: usize) -> Goal {
    let r = |t: &Term| t.rename_vars(&mut |v| format!("{}_{}", v, n));
    let kind = match &g.kind {
        GoalKind::Unify(a, b) => GoalKind::Unify(r(a), r(b)),
        GoalKind::Call(f, args) => GoalKind::Call(f.clone(), args.iter().map(r).collect()),
        GoalKind::Conj(gs) => GoalKind::Conj(gs.iter().map(|g| rename_goal(g, n)).collect()),
        GoalKind::Disj(gs) => GoalKind::Disj(gs.iter().map(|g| rename_goal(g, n)).collect()),
        GoalKind::Not(i) => GoalKind::Not(Box::new(rename_goal(i, n))),
        GoalKind::IfThenElse(c, t, e) => GoalKind::IfThenElse(
            Box::new(rename_goal(c, n)),
            Box::new(rename_goal(t, n)),
            Box::new(rename_goal(e, n)),
        ),
        GoalKind::Log(l) => GoalKind::Log(l.clone()),
    };
    Goal::new(kind, g.span)
}
