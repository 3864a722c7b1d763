use super::bindings::Bindings;
use super::Unwind;
use crate::lang::{atom_to_string, term_to_string, Term};

pub(crate) fn error_term(kind: &str, args: Vec<Term>) -> Term {
    Term::compound("error", vec![Term::compound(kind, args)])
}

fn instantiation_error(what: &str) -> Unwind {
    Unwind::Throw(error_term("instantiation_error", vec![Term::atom(what)]))
}

fn eval_error(what: &str) -> Unwind {
    Unwind::Throw(error_term("evaluation_error", vec![Term::atom(what)]))
}

/// Evaluates an arithmetic expression over integers, with checked overflow.
pub fn eval_arith(t: &Term, b: &Bindings) -> Result<i64, Unwind> {
    let t = b.walk(t);
    let overflow = || eval_error("int_overflow");
    match t {
        Term::Int(i) => Ok(*i),
        Term::Var(_) => Err(instantiation_error("arithmetic")),
        Term::Compound(f, args) => {
            let vals = args.iter().map(|a| eval_arith(a, b)).collect::<Result<Vec<_>, _>>()?;
            match (f.as_str(), vals.as_slice()) {
                ("+", [x, y]) => x.checked_add(*y).ok_or_else(overflow),
                ("-", [x, y]) => x.checked_sub(*y).ok_or_else(overflow),
                ("*", [x, y]) => x.checked_mul(*y).ok_or_else(overflow),
                ("/" | "//", [_, 0]) | ("mod", [_, 0]) => Err(eval_error("zero_divisor")),
                ("/" | "//", [x, y]) => x.checked_div(*y).ok_or_else(overflow),
                ("mod", [x, y]) => {
                    let r = x.checked_rem(*y).ok_or_else(overflow)?;
                    Ok(if r != 0 && (r < 0) != (*y < 0) { r + y } else { r })
                }
                ("-", [x]) => x.checked_neg().ok_or_else(overflow),
                ("+", [x]) => Ok(*x),
                ("abs", [x]) => x.checked_abs().ok_or_else(overflow),
                ("min", [x, y]) => Ok(*x.min(y)),
                ("max", [x, y]) => Ok(*x.max(y)),
                _ => Err(Unwind::Throw(error_term(
                    "type_error",
                    vec![
                        Term::atom("evaluable"),
                        Term::atom(format!("{}/{}", atom_to_string(f), args.len())),
                    ],
                ))),
            }
        }
    }
}

/// Runs a builtin. Every builtin has at most one solution.
pub fn eval_builtin(
    name: &str,
    args: &[Term],
    b: &Bindings,
    out: &mut dyn FnMut(&str),
) -> Result<Option<Bindings>, Unwind> {
    let ground = |t: &Term| -> Result<Term, Unwind> {
        let r = b.resolve(t);
        if r.is_ground() {
            Ok(r)
        } else {
            Err(instantiation_error(name))
        }
    };
    let test = |ok: bool| Ok(ok.then(|| b.clone()));
    match (name, args) {
        ("true", []) => Ok(Some(b.clone())),
        ("fail", []) => Ok(None),
        ("<", [x, y]) => test(eval_arith(x, b)? < eval_arith(y, b)?),
        (">", [x, y]) => test(eval_arith(x, b)? > eval_arith(y, b)?),
        ("=<", [x, y]) => test(eval_arith(x, b)? <= eval_arith(y, b)?),
        (">=", [x, y]) => test(eval_arith(x, b)? >= eval_arith(y, b)?),
        ("\\=", [x, y]) => test(ground(x)? != ground(y)?),
        ("==", [x, y]) => test(ground(x)? == ground(y)?),
        ("is", [x, e]) => {
            let v = eval_arith(e, b)?;
            Ok(super::unify(x, &Term::Int(v), b))
        }
        ("length", [l, n]) => {
            let l = ground(l)?;
            let Some(items) = l.list_items() else {
                return Err(Unwind::Throw(error_term("type_error", vec![Term::atom("list"), l])));
            };
            Ok(super::unify(n, &Term::Int(items.len() as i64), b))
        }
        ("throw", [t]) => Err(Unwind::Throw(ground(t)?)),
        ("print", [t]) => {
            out(&term_to_string(&ground(t)?));
            Ok(Some(b.clone()))
        }
        _ => Err(Unwind::Internal(format!("unknown builtin {}/{}", name, args.len()))),
    }
}
