//! Checks for `type(V, T)` assertions.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::lang::{Term, TypeDef, TypeExpr, CONS, NIL};

/// Whether `t` names a known type applied to the right number of parameters.
pub fn well_formed(t: &TypeExpr, defs: &IndexMap<String, TypeDef>) -> Result<(), String> {
    match t {
        TypeExpr::Var(_) => Ok(()),
        TypeExpr::Con(n, ps) => {
            let expected = match (defs.get(n), n.as_str()) {
                (Some(d), _) => d.params.len(),
                (None, "int") => 0,
                (None, "list") => 1,
                _ => return Err(format!("unknown type {}", n)),
            };
            if ps.len() != expected {
                return Err(format!("type {} expects {} parameter(s)", n, expected));
            }
            ps.iter().try_for_each(|p| well_formed(p, defs))
        }
    }
}

fn subst(t: &TypeExpr, env: &HashMap<&str, &TypeExpr>) -> TypeExpr {
    match t {
        TypeExpr::Var(v) => env.get(v.as_str()).map_or_else(|| t.clone(), |s| (*s).clone()),
        TypeExpr::Con(n, ps) => TypeExpr::Con(n.clone(), ps.iter().map(|p| subst(p, env)).collect()),
    }
}

/// Whether the ground value `v` inhabits `t`. Type variables admit anything.
pub fn conforms(v: &Term, t: &TypeExpr, defs: &IndexMap<String, TypeDef>) -> bool {
    let TypeExpr::Con(name, params) = t else { return true };
    if let Some(def) = defs.get(name) {
        let env: HashMap<&str, &TypeExpr> = def.params.iter().map(String::as_str).zip(params).collect();
        let Term::Compound(f, args) = v else { return false };
        return def
            .constructors
            .iter()
            .filter(|(c, cargs)| c == f && cargs.len() == args.len())
            .any(|(_, cargs)| {
                cargs
                    .iter()
                    .zip(args)
                    .all(|(ct, a)| conforms(a, &subst(ct, &env), defs))
            });
    }
    match (name.as_str(), v) {
        ("int", Term::Int(_)) => true,
        ("list", Term::Compound(f, args)) if f == NIL && args.is_empty() => true,
        ("list", Term::Compound(f, args)) if f == CONS && args.len() == 2 => {
            conforms(&args[0], &params[0], defs) && conforms(&args[1], t, defs)
        }
        _ => false,
    }
}

/// Unifies two type expressions whose variables are disjoint.
pub fn compatible(a: &TypeExpr, b: &TypeExpr) -> bool {
    fn walk<'a>(t: &'a TypeExpr, s: &'a HashMap<String, TypeExpr>) -> TypeExpr {
        match t {
            TypeExpr::Var(v) => s.get(v).map_or_else(|| t.clone(), |u| walk(u, s)),
            _ => t.clone(),
        }
    }
    fn occurs(v: &str, t: &TypeExpr, s: &HashMap<String, TypeExpr>) -> bool {
        match walk(t, s) {
            TypeExpr::Var(w) => w == v,
            TypeExpr::Con(_, ps) => ps.iter().any(|p| occurs(v, p, s)),
        }
    }
    fn go(a: &TypeExpr, b: &TypeExpr, s: &mut HashMap<String, TypeExpr>) -> bool {
        match (walk(a, s), walk(b, s)) {
            (TypeExpr::Var(x), TypeExpr::Var(y)) if x == y => true,
            (TypeExpr::Var(x), t) | (t, TypeExpr::Var(x)) => {
                if occurs(&x, &t, s) {
                    return false;
                }
                s.insert(x, t);
                true
            }
            (TypeExpr::Con(f, ps), TypeExpr::Con(g, qs)) => {
                f == g && ps.len() == qs.len() && ps.iter().zip(&qs).all(|(p, q)| go(p, q, s))
            }
        }
    }
    go(a, b, &mut HashMap::new())
}

/// Renames the variables of a declared signature type apart from user types.
pub fn rename_apart(t: &TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Var(v) => TypeExpr::Var(format!("{}'sig", v)),
        TypeExpr::Con(n, ps) => TypeExpr::Con(n.clone(), ps.iter().map(rename_apart).collect()),
    }
}
