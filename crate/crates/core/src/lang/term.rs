use std::collections::BTreeSet;
use std::fmt;

/// Functor used for list cells. `[H|T]` is `'[|]'(H, T)`.
pub const CONS: &str = "[|]";
/// The empty list atom.
pub const NIL: &str = "[]";

/// A line/column position. Both are 1-based; columns count characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Half-open source range: `end` is the position just past the last character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    /// Smallest span covering both.
    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// A first-order term. Atoms are compounds with no arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Int(i64),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn atom(name: impl Into<String>) -> Term {
        Term::Compound(name.into(), Vec::new())
    }

    pub fn compound(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Compound(name.into(), args)
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Compound(CONS.to_string(), vec![head, tail])
    }

    /// Builds a proper list, or a partial one when `tail` is given.
    pub fn list(items: impl IntoIterator<Item = Term>, tail: Option<Term>) -> Term {
        let items: Vec<Term> = items.into_iter().collect();
        let mut acc = tail.unwrap_or_else(Term::nil);
        for item in items.into_iter().rev() {
            acc = Term::cons(item, acc);
        }
        acc
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Term::Compound(_, args) if args.is_empty())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Principal function symbol, `None` for variables.
    pub fn symbol(&self) -> Option<Symbol> {
        match self {
            Term::Var(_) => None,
            Term::Int(i) => Some(Symbol::Int(*i)),
            Term::Compound(name, args) => Some(Symbol::Functor(name.clone(), args.len())),
        }
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        self.vars().into_iter().collect()
    }

    /// Elements of a proper list, `None` if the term is not one.
    pub fn list_items(&self) -> Option<Vec<&Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Compound(n, args) if n == NIL && args.is_empty() => return Some(items),
                Term::Compound(n, args) if n == CONS && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    /// Applies `f` to every variable name.
    pub fn rename_vars(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::Int(i) => Term::Int(*i),
            Term::Compound(n, args) => Term::Compound(n.clone(), args.iter().map(|a| a.rename_vars(f)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::printer::term_to_string(self))
    }
}

/// A function symbol as tested by a switch: a named functor with arity, or an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Functor(String, usize),
    Int(i64),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Functor(n, a) => write!(f, "{}/{}", n, a),
            Symbol::Int(i) => write!(f, "{}", i),
        }
    }
}

/// Type expressions: type variables or applied type constructors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Var(String),
    Con(String, Vec<TypeExpr>),
}

impl TypeExpr {
    pub fn con(name: impl Into<String>, params: Vec<TypeExpr>) -> TypeExpr {
        TypeExpr::Con(name.into(), params)
    }

    pub fn int() -> TypeExpr {
        TypeExpr::con("int", vec![])
    }

    pub fn list_of(elem: TypeExpr) -> TypeExpr {
        TypeExpr::con("list", vec![elem])
    }

    pub fn name(&self) -> &str {
        match self {
            TypeExpr::Var(v) => v,
            TypeExpr::Con(n, _) => n,
        }
    }

    pub fn params(&self) -> &[TypeExpr] {
        match self {
            TypeExpr::Var(_) => &[],
            TypeExpr::Con(_, p) => p,
        }
    }

    pub fn from_term(t: &Term) -> Option<TypeExpr> {
        match t {
            Term::Var(v) => Some(TypeExpr::Var(v.clone())),
            Term::Int(_) => None,
            Term::Compound(n, args) => Some(TypeExpr::Con(
                n.clone(),
                args.iter().map(TypeExpr::from_term).collect::<Option<Vec<_>>>()?,
            )),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            TypeExpr::Var(v) => Term::Var(v.clone()),
            TypeExpr::Con(n, p) => Term::Compound(n.clone(), p.iter().map(|t| t.to_term()).collect()),
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::printer::term_to_string(&self.to_term()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_construction_uses_cons_and_nil() {
        let l = Term::list([Term::Int(1), Term::Int(2)], None);
        assert_eq!(l, Term::cons(Term::Int(1), Term::cons(Term::Int(2), Term::nil())));
        assert_eq!(l.list_items().unwrap().len(), 2);
        assert!(Term::cons(Term::Int(1), Term::var("T")).list_items().is_none());
    }

    #[test]
    fn groundness_and_vars() {
        let t = Term::compound("f", vec![Term::var("X"), Term::Int(1), Term::var("X")]);
        assert!(!t.is_ground());
        assert_eq!(t.vars(), vec!["X".to_string()]);
        assert!(Term::atom("a").is_atom());
    }
}
