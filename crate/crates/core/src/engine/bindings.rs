use std::collections::HashMap;

use crate::lang::Term;

/// A substitution in triangular form: a bound variable may map to a term that
/// still contains bound variables. `resolve` applies it fully.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings {
    map: HashMap<String, Term>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn bind(&mut self, var: impl Into<String>, t: Term) {
        self.map.insert(var.into(), t);
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Follows variable-to-variable links until a non-variable or an unbound variable.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Applies the substitution all the way down.
    pub fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Compound(f, args) if !args.is_empty() => {
                Term::Compound(f.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
            other => other.clone(),
        }
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::Compound(_, args) => args.iter().all(|a| self.is_ground(a)),
        }
    }

    fn occurs(&self, v: &str, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => w == v,
            Term::Int(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// Extends the bindings so that `a` and `b` become equal; false on clash.
    /// On failure the bindings may be partially extended.
    pub fn unify_in_place(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(x, t) {
                    return false;
                }
                self.map.insert(x.clone(), t.clone());
                true
            }
            (Term::Int(i), Term::Int(j)) => i == j,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify_in_place(x, y))
            }
            _ => false,
        }
    }
}

/// Most general unifier extending `bindings`, if any (with occurs check).
pub fn unify(a: &Term, b: &Term, bindings: &Bindings) -> Option<Bindings> {
    let mut out = bindings.clone();
    out.unify_in_place(a, b).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn binds_free_variable() {
        let b = unify(&t("X"), &t("f(1)"), &Bindings::new()).unwrap();
        assert_eq!(b.resolve(&t("X")), t("f(1)"));
    }

    #[test]
    fn functor_clash_fails() {
        assert!(unify(&t("f(1)"), &t("g(1)"), &Bindings::new()).is_none());
        assert!(unify(&t("f(1)"), &t("f(1, 2)"), &Bindings::new()).is_none());
        assert!(unify(&t("1"), &t("2"), &Bindings::new()).is_none());
    }

    #[test]
    fn list_tail_is_bound() {
        let b = unify(&t("[1|T]"), &t("[1, 2]"), &Bindings::new()).unwrap();
        assert_eq!(b.resolve(&t("T")), t("[2]"));
    }

    #[test]
    fn occurs_check() {
        assert!(unify(&t("X"), &t("f(X)"), &Bindings::new()).is_none());
    }

    #[test]
    fn chains_resolve() {
        let b = unify(&t("f(X, Y)"), &t("f(Y, 3)"), &Bindings::new()).unwrap();
        assert_eq!(b.resolve(&t("X")), t("3"));
        assert!(b.is_ground(&t("g(X)")));
    }
}
