//! Operator-precedence reader for the clause syntax, plus conversion of read
//! terms into programs and goals.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::term::{Pos, Span, Term, TypeExpr, CONS, NIL};
use super::{is_builtin, Error, SyntaxError};
use crate::coverage::SwitchTree;

/// Internal functor for `if C then T else E`; it cannot be written in source.
pub const ITE: &str = "if then else";

/// A term as read, with its span and whether it was parenthesised.
#[derive(Clone, Debug)]
pub struct STerm {
    pub kind: SKind,
    pub span: Span,
    pub parens: bool,
}

#[derive(Clone, Debug)]
pub enum SKind {
    Var(String),
    Int(i64),
    Compound(String, Vec<STerm>),
}

impl STerm {
    pub fn to_term(&self) -> Term {
        match &self.kind {
            SKind::Var(v) => Term::Var(v.clone()),
            SKind::Int(i) => Term::Int(*i),
            SKind::Compound(n, args) => Term::Compound(n.clone(), args.iter().map(STerm::to_term).collect()),
        }
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match &self.kind {
            SKind::Compound(n, a) => Some((n.as_str(), a.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[STerm] {
        match &self.kind {
            SKind::Compound(_, a) => a,
            _ => &[],
        }
    }

    pub fn is_functor(&self, name: &str, arity: usize) -> bool {
        self.functor() == Some((name, arity))
    }

    /// Items of a proper list written in the source.
    pub fn list_items(&self) -> Option<Vec<&STerm>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_functor(NIL, 0) {
                return Some(out);
            }
            if cur.is_functor(CONS, 2) {
                out.push(&cur.args()[0]);
                cur = &cur.args()[1];
            } else {
                return None;
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Assoc {
    Xfx,
    Xfy,
    Yfx,
}

fn infix_op(name: &str) -> Option<(u32, Assoc)> {
    Some(match name {
        ":-" => (1200, Assoc::Xfx),
        "--->" => (1179, Assoc::Xfy),
        ";" => (1100, Assoc::Xfy),
        "," => (1000, Assoc::Xfy),
        "=" | "\\=" | "<" | ">" | "=<" | ">=" | "is" | "==" => (700, Assoc::Xfx),
        "+" | "-" => (500, Assoc::Yfx),
        "*" | "/" | "//" | "mod" => (400, Assoc::Yfx),
        _ => return None,
    })
}

/// Prefix operators: (priority, argument may have equal priority).
fn prefix_op(name: &str) -> Option<(u32, bool)> {
    Some(match name {
        ":-" | "?-" => (1200, false),
        "type" => (1180, false),
        "pred" | "mode" => (1150, false),
        "not" | "\\+" => (900, true),
        "-" => (200, true),
        _ => return None,
    })
}

pub(crate) struct Reader {
    toks: Vec<Token>,
    at: usize,
    anon: usize,
}

impl Reader {
    pub(crate) fn new(src: &str) -> Result<Reader, SyntaxError> {
        Ok(Reader {
            toks: tokenize(src)?,
            at: 0,
            anon: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn last_end(&self) -> Pos {
        if self.at == 0 {
            Pos::new(1, 1)
        } else {
            self.toks[self.at - 1].end
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(self.peek().start, msg))
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    /// Reads one `.`-terminated clause term.
    pub(crate) fn read_clause(&mut self) -> Result<STerm, SyntaxError> {
        self.anon = 0;
        let t = self.parse(1200)?;
        match self.peek().tok {
            Tok::End => {
                self.next();
                Ok(t)
            }
            _ => self.err(format!("expected `.` but found {}", describe(&self.peek().tok))),
        }
    }

    /// Reads a term that must span the whole input (a final `.` is optional).
    pub(crate) fn read_whole(&mut self) -> Result<STerm, SyntaxError> {
        let t = self.parse(1200)?;
        if self.peek().tok == Tok::End {
            self.next();
        }
        if !self.at_eof() {
            return self.err(format!("unexpected {} after term", describe(&self.peek().tok)));
        }
        Ok(t)
    }

    fn mk(&self, kind: SKind, start: Pos) -> STerm {
        STerm {
            kind,
            span: Span::new(start, self.last_end()),
            parens: false,
        }
    }

    fn parse(&mut self, max: u32) -> Result<STerm, SyntaxError> {
        let (mut left, mut left_prec) = self.parse_primary(max)?;
        loop {
            let tok = self.peek().clone();
            let name = match &tok.tok {
                Tok::Comma => ",".to_string(),
                Tok::Name(n) if !tok.quoted => n.clone(),
                _ => break,
            };
            let Some((p, assoc)) = infix_op(&name) else { break };
            let left_max = if assoc == Assoc::Yfx { p } else { p - 1 };
            if p > max || left_prec > left_max {
                break;
            }
            self.next();
            let right_max = if assoc == Assoc::Xfy { p } else { p - 1 };
            let right = self.parse(right_max)?;
            let span = left.span.join(right.span);
            left = STerm {
                kind: SKind::Compound(name, vec![left, right]),
                span,
                parens: false,
            };
            left_prec = p;
        }
        Ok(left)
    }

    fn starts_term(tok: &Token) -> bool {
        match &tok.tok {
            Tok::Var(_) | Tok::Int(_) | Tok::Open | Tok::OpenList => true,
            Tok::Name(n) => tok.quoted || infix_op(n).is_none() || prefix_op(n).is_some(),
            _ => false,
        }
    }

    fn parse_primary(&mut self, max: u32) -> Result<(STerm, u32), SyntaxError> {
        let tok = self.next();
        let start = tok.start;
        match tok.tok {
            Tok::Int(i) => Ok((self.mk(SKind::Int(i), start), 0)),
            Tok::Var(v) => {
                if self.peek().tok == Tok::Open && !self.peek().spaced {
                    return self.err("a variable cannot be used as a functor");
                }
                let name = if v == "_" {
                    self.anon += 1;
                    format!("_G{}", self.anon)
                } else {
                    v
                };
                Ok((self.mk(SKind::Var(name), start), 0))
            }
            Tok::Open => {
                let mut inner = self.parse(1200)?;
                self.expect(Tok::Close, "`)`")?;
                inner.parens = true;
                inner.span = Span::new(start, self.last_end());
                Ok((inner, 0))
            }
            Tok::OpenList => {
                if self.peek().tok == Tok::CloseList {
                    self.next();
                    return Ok((self.mk(SKind::Compound(NIL.into(), vec![]), start), 0));
                }
                let mut items = vec![self.parse(999)?];
                while self.peek().tok == Tok::Comma {
                    self.next();
                    items.push(self.parse(999)?);
                }
                let tail = if self.peek().tok == Tok::Bar {
                    self.next();
                    Some(self.parse(999)?)
                } else {
                    None
                };
                self.expect(Tok::CloseList, "`]`")?;
                let end = self.last_end();
                let mut acc = match tail {
                    Some(t) => t,
                    None => STerm {
                        kind: SKind::Compound(NIL.into(), vec![]),
                        span: Span::new(end, end),
                        parens: false,
                    },
                };
                for item in items.into_iter().rev() {
                    let span = Span::new(item.span.start, end);
                    acc = STerm {
                        kind: SKind::Compound(CONS.into(), vec![item, acc]),
                        span,
                        parens: false,
                    };
                }
                acc.span = Span::new(start, end);
                Ok((acc, 0))
            }
            Tok::Name(name) => {
                let next = self.peek().clone();
                let call_paren = next.tok == Tok::Open;
                if call_paren && (!next.spaced || tok.quoted || prefix_op(&name).is_none()) {
                    self.next();
                    let mut args = vec![self.parse(999)?];
                    while self.peek().tok == Tok::Comma {
                        self.next();
                        args.push(self.parse(999)?);
                    }
                    self.expect(Tok::Close, "`)`")?;
                    return Ok((self.mk(SKind::Compound(name, args), start), 0));
                }
                if tok.quoted {
                    return Ok((self.mk(SKind::Compound(name, vec![]), start), 0));
                }
                if name == "if" && Self::starts_term(&next) {
                    let cond = self.parse(1100)?;
                    self.expect_name("then")?;
                    let then = self.parse(1100)?;
                    self.expect_name("else")?;
                    let els = self.parse(1100)?;
                    return Ok((self.mk(SKind::Compound(ITE.into(), vec![cond, then, els]), start), 0));
                }
                if name == "-" && !next.spaced {
                    if let Tok::Int(i) = next.tok {
                        self.next();
                        return Ok((self.mk(SKind::Int(-i), start), 0));
                    }
                }
                if let Some((p, fy)) = prefix_op(&name) {
                    if Self::starts_term(&next) {
                        let p = p.min(max);
                        let arg_max = if fy { p } else { p.saturating_sub(1) };
                        let arg = self.parse(arg_max)?;
                        return Ok((self.mk(SKind::Compound(name, vec![arg]), start), p));
                    }
                }
                Ok((self.mk(SKind::Compound(name, vec![]), start), 0))
            }
            other => Err(SyntaxError::new(start, format!("unexpected {}", describe(&other)))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {} but found {}", what, describe(&self.peek().tok)))
        }
    }

    fn expect_name(&mut self, name: &str) -> Result<(), SyntaxError> {
        if self.peek().tok == Tok::Name(name.to_string()) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{}` but found {}", name, describe(&self.peek().tok)))
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("`{}`", n),
        Tok::Var(v) => format!("variable `{}`", v),
        Tok::Int(i) => format!("`{}`", i),
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::OpenList => "`[`".into(),
        Tok::CloseList => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Bar => "`|`".into(),
        Tok::End => "end of clause".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a single term; list sugar is expanded to `'[|]'/2` cells.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    Ok(Reader::new(text)?.read_whole()?.to_term())
}

/// Parses a goal written with the clause-body syntax.
pub fn parse_goal(text: &str) -> Result<Goal, Error> {
    let st = Reader::new(text)?.read_whole()?;
    term_to_goal(&st)
}

/// Reads every `.`-terminated term in `text`.
pub fn read_terms(text: &str) -> Result<Vec<STerm>, SyntaxError> {
    let mut reader = Reader::new(text)?;
    let mut out = Vec::new();
    while !reader.at_eof() {
        out.push(reader.read_clause()?);
    }
    Ok(out)
}

fn bad(span: Span, msg: impl Into<String>) -> Error {
    Error::Syntax(SyntaxError::new(span.start, msg))
}

/// Converts a read term into a goal.
pub fn term_to_goal(t: &STerm) -> Result<Goal, Error> {
    let span = t.span;
    match &t.kind {
        SKind::Var(v) => Err(bad(span, format!("variable `{}` used as a goal", v))),
        SKind::Int(i) => Err(bad(span, format!("integer `{}` used as a goal", i))),
        SKind::Compound(name, args) => {
            let name = name.as_str();
            Ok(match (name, args.len()) {
                (",", 2) => Goal::new(GoalKind::Conj(flatten_op(t, ",")?), span),
                (";", 2) => Goal::new(GoalKind::Disj(flatten_op(t, ";")?), span),
                (ITE, 3) => Goal::new(
                    GoalKind::IfThenElse(
                        Box::new(term_to_goal(&args[0])?),
                        Box::new(term_to_goal(&args[1])?),
                        Box::new(term_to_goal(&args[2])?),
                    ),
                    span,
                ),
                ("not" | "\\+", 1) => Goal::new(GoalKind::Not(Box::new(term_to_goal(&args[0])?)), span),
                ("=", 2) => Goal::unify(args[0].to_term(), args[1].to_term(), span),
                ("log", 1) => Goal::log(LogGoal::Label(label_arg(&args[0])?), span),
                ("log_switch", 1) => Goal::log(LogGoal::SwitchEntry(label_arg(&args[0])?), span),
                ("log_batch", 2) => Goal::log(
                    LogGoal::Batch {
                        switch: label_arg(&args[0])?,
                        leaf: label_arg(&args[1])?,
                    },
                    span,
                ),
                _ => Goal::call(name, args.iter().map(STerm::to_term).collect(), span),
            })
        }
    }
}

fn label_arg(t: &STerm) -> Result<u32, Error> {
    match t.kind {
        SKind::Int(i) if i > 0 && i <= u32::MAX as i64 => Ok(i as u32),
        _ => Err(bad(t.span, "instrumentation goals take positive integer ids")),
    }
}

/// Flattens an unparenthesised right-nested chain of `op`.
fn flatten_op(t: &STerm, op: &str) -> Result<Vec<Goal>, Error> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        let args = cur.args();
        out.push(term_to_goal(&args[0])?);
        let rest = &args[1];
        if rest.is_functor(op, 2) && !rest.parens {
            cur = rest;
        } else {
            out.push(term_to_goal(rest)?);
            return Ok(out);
        }
    }
}

/// Parses a program text.
pub fn parse_program(text: &str) -> Result<Program, Error> {
    let mut builder = ProgramBuilder::default();
    for st in read_terms(text)? {
        builder.add(&st)?;
    }
    builder.finish()
}

#[derive(Default)]
struct ProgramBuilder {
    program: Program,
    /// Names with a `pred` or `mode` declaration, with the declared arity.
    declared: BTreeMap<String, Vec<usize>>,
    pred_decl_seen: BTreeMap<PredKey, Span>,
}

impl ProgramBuilder {
    fn entry(&mut self, name: &str, arity: usize) -> &mut PredicateDef {
        self.program
            .predicates
            .entry(PredKey::new(name, arity))
            .or_insert_with(|| PredicateDef::new(name, arity))
    }

    fn declare(&mut self, name: &str, arity: usize) {
        let v = self.declared.entry(name.to_string()).or_default();
        if !v.contains(&arity) {
            v.push(arity);
        }
    }

    fn add(&mut self, st: &STerm) -> Result<(), Error> {
        if st.is_functor(":-", 1) {
            return self.declaration(&st.args()[0]);
        }
        let (head, body) = if st.is_functor(":-", 2) {
            (&st.args()[0], Some(&st.args()[1]))
        } else {
            (st, None)
        };
        let (name, args) = match &head.kind {
            SKind::Compound(n, a) => (n.clone(), a),
            SKind::Var(_) => return Err(bad(head.span, "clause head is a variable")),
            SKind::Int(_) => return Err(bad(head.span, "clause head is an integer")),
        };
        if is_builtin(&name, args.len()) || matches!(name.as_str(), "," | ";" | "=" | ITE) {
            return Err(bad(
                head.span,
                format!("cannot redefine builtin {}/{}", name, args.len()),
            ));
        }
        let body = match body {
            Some(b) => term_to_goal(b)?,
            None => Goal::truth(head.span),
        };
        let clause = Clause {
            head: args.iter().map(STerm::to_term).collect(),
            head_spans: args.iter().map(|a| a.span).collect(),
            body,
            span: st.span,
        };
        self.entry(&name, args.len()).clauses.push(clause);
        Ok(())
    }

    fn declaration(&mut self, d: &STerm) -> Result<(), Error> {
        match d.functor() {
            Some(("pred", 1)) => {
                let head = &d.args()[0];
                let Some((name, arity)) = head.functor() else {
                    return Err(bad(head.span, "malformed pred declaration"));
                };
                let name = name.to_string();
                let sig = head
                    .args()
                    .iter()
                    .map(|a| TypeExpr::from_term(&a.to_term()).ok_or_else(|| bad(a.span, "malformed type expression")))
                    .collect::<Result<Vec<_>, _>>()?;
                let key = PredKey::new(name.clone(), arity);
                if self.pred_decl_seen.insert(key.clone(), d.span).is_some() {
                    return Err(Error::DuplicatePred(key));
                }
                self.declare(&name, arity);
                self.entry(&name, arity).type_sig = Some(sig);
                Ok(())
            }
            Some(("mode", 1)) => {
                let m = &d.args()[0];
                if !m.is_functor("is", 2) {
                    return Err(bad(
                        m.span,
                        "mode declaration must have the form `mode p(in, out) is det`",
                    ));
                }
                let head = &m.args()[0];
                let det = match m.args()[1].functor() {
                    Some((n, 0)) => n.parse::<Determinism>().map_err(|e| bad(m.args()[1].span, e))?,
                    _ => return Err(bad(m.args()[1].span, "expected a determinism")),
                };
                let Some((name, arity)) = head.functor() else {
                    return Err(bad(head.span, "malformed mode declaration"));
                };
                let name = name.to_string();
                let modes = head
                    .args()
                    .iter()
                    .map(|a| match a.functor() {
                        Some(("in", 0)) => Ok(ArgMode::In),
                        Some(("out", 0)) => Ok(ArgMode::Out),
                        _ => Err(bad(a.span, "argument modes are `in` or `out`")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let decl = ModeDecl::new(modes, det);
                self.declare(&name, arity);
                let pred = self.entry(&name, arity);
                if pred.modes.iter().any(|existing| existing.arg_modes == decl.arg_modes) {
                    return Err(Error::DuplicateMode(pred.key()));
                }
                pred.modes.push(decl);
                Ok(())
            }
            Some(("type", 1)) => self.type_decl(&d.args()[0]),
            Some(("switch", 4)) => {
                let tree = SwitchTree::from_decl_term(&d.to_term()).map_err(|m| bad(d.span, m))?;
                self.program.switches.insert(tree.id, tree);
                Ok(())
            }
            _ => Err(bad(d.span, "unknown declaration")),
        }
    }

    fn type_decl(&mut self, t: &STerm) -> Result<(), Error> {
        if !t.is_functor("--->", 2) {
            return Err(bad(t.span, "type declaration must have the form `type t ---> c1 ; c2`"));
        }
        let head = &t.args()[0];
        let Some((name, _)) = head.functor() else {
            return Err(bad(head.span, "malformed type name"));
        };
        let params = head
            .args()
            .iter()
            .map(|a| match &a.kind {
                SKind::Var(v) => Ok(v.clone()),
                _ => Err(bad(a.span, "type parameters must be variables")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut alts = Vec::new();
        let mut cur = &t.args()[1];
        loop {
            if cur.is_functor(";", 2) && !cur.parens {
                alts.push(&cur.args()[0]);
                cur = &cur.args()[1];
            } else {
                alts.push(cur);
                break;
            }
        }
        let mut constructors = Vec::new();
        for alt in alts {
            let Some((cname, _)) = alt.functor() else {
                return Err(bad(alt.span, "constructor expected"));
            };
            let args = alt
                .args()
                .iter()
                .map(|a| TypeExpr::from_term(&a.to_term()).ok_or_else(|| bad(a.span, "malformed type expression")))
                .collect::<Result<Vec<_>, _>>()?;
            constructors.push((cname.to_string(), args));
        }
        self.program.type_defs.insert(
            name.to_string(),
            TypeDef {
                name: name.to_string(),
                params,
                constructors,
            },
        );
        Ok(())
    }

    fn finish(self) -> Result<Program, Error> {
        let program = self.program;
        for pred in program.predicates.values() {
            if let Some(sig) = &pred.type_sig {
                if sig.len() != pred.arity {
                    return Err(Error::ArityMismatch {
                        key: pred.key(),
                        declared: sig.len(),
                    });
                }
            }
            if let Some(arities) = self.declared.get(&pred.name) {
                if !arities.contains(&pred.arity) {
                    return Err(Error::ArityMismatch {
                        key: pred.key(),
                        declared: arities[0],
                    });
                }
            }
        }
        check_defined(&program)?;
        Ok(program)
    }
}

/// Every called predicate must be defined or builtin.
pub(crate) fn check_defined(program: &Program) -> Result<(), Error> {
    for pred in program.predicates.values() {
        for clause in &pred.clauses {
            let mut missing = None;
            clause.body.walk(&mut |g| {
                if let GoalKind::Call(name, args) = &g.kind {
                    if missing.is_none()
                        && !is_builtin(name, args.len())
                        && !program.predicates.contains_key(&PredKey::new(name.clone(), args.len()))
                    {
                        missing = Some(PredKey::new(name.clone(), args.len()));
                    }
                }
            });
            if let Some(key) = missing {
                return Err(Error::UndefinedPredicate(key));
            }
        }
    }
    Ok(())
}
