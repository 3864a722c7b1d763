//! Pretty printer. Output re-reads to a structurally identical program.

use std::fmt::Write;

use super::ast::*;
use super::term::{Term, CONS, NIL};
use crate::coverage::SwitchTree;

const INDENT: &str = "    ";

fn is_infix(name: &str) -> bool {
    matches!(
        name,
        ":-" | "--->"
            | ";"
            | ","
            | "="
            | "\\="
            | "<"
            | ">"
            | "=<"
            | ">="
            | "is"
            | "=="
            | "+"
            | "-"
            | "*"
            | "/"
            | "//"
            | "mod"
    )
}

fn needs_quotes(name: &str) -> bool {
    if name == NIL || name == ";" || name == "!" {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_lowercase() => !name.chars().all(|c| c.is_alphanumeric() || c == '_'),
        Some(_) if name.chars().all(|c| "+-*/\\^<>=~:.?@#&$".contains(c)) => name == ".",
        Some(_) => true,
    }
}

pub fn atom_to_string(name: &str) -> String {
    if needs_quotes(name) {
        let mut s = String::from("'");
        for c in name.chars() {
            match c {
                '\'' => s.push_str("''"),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                '\t' => s.push_str("\\t"),
                c => s.push(c),
            }
        }
        s.push('\'');
        s
    } else {
        name.to_string()
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Int(i) => {
            let _ = write!(out, "{}", i);
        }
        Term::Compound(name, args) if name == CONS && args.len() == 2 => {
            out.push('[');
            write_term(out, &args[0]);
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Compound(n, a) if n == CONS && a.len() == 2 => {
                        out.push_str(", ");
                        write_term(out, &a[0]);
                        tail = &a[1];
                    }
                    Term::Compound(n, a) if n == NIL && a.is_empty() => break,
                    other => {
                        out.push_str(" | ");
                        write_term(out, other);
                        break;
                    }
                }
            }
            out.push(']');
        }
        Term::Compound(name, args) if args.is_empty() => out.push_str(&atom_to_string(name)),
        Term::Compound(name, args) if args.len() == 2 && is_infix(name) => {
            out.push('(');
            write_term(out, &args[0]);
            let _ = write!(out, " {} ", name);
            write_term(out, &args[1]);
            out.push(')');
        }
        Term::Compound(name, args) => {
            if name == NIL || name == ";" || name == "!" {
                let _ = write!(out, "'{}'", name);
            } else {
                out.push_str(&atom_to_string(name));
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, a);
            }
            out.push(')');
        }
    }
}

/// Writes a goal at the given indentation depth; no trailing newline.
pub fn goal_to_string(g: &Goal, depth: usize) -> String {
    let mut s = String::new();
    write_goal(&mut s, g, depth);
    s
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn write_goal(out: &mut String, g: &Goal, depth: usize) {
    match &g.kind {
        GoalKind::Conj(gs) if gs.is_empty() => {
            pad(out, depth);
            out.push_str("true");
        }
        GoalKind::Conj(gs) => {
            for (i, c) in gs.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n");
                }
                // a conjunction nested directly in a conjunction needs parentheses
                if matches!(c.kind, GoalKind::Conj(_)) {
                    pad(out, depth);
                    out.push_str("(\n");
                    write_goal(out, c, depth + 1);
                    out.push('\n');
                    pad(out, depth);
                    out.push(')');
                } else {
                    write_goal(out, c, depth);
                }
            }
        }
        GoalKind::Disj(ds) => {
            pad(out, depth);
            out.push_str("(\n");
            for (i, d) in ds.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                    pad(out, depth);
                    out.push_str(";\n");
                }
                if matches!(d.kind, GoalKind::Disj(_)) {
                    pad(out, depth + 1);
                    out.push_str("(\n");
                    write_goal(out, d, depth + 2);
                    out.push('\n');
                    pad(out, depth + 1);
                    out.push(')');
                } else {
                    write_goal(out, d, depth + 1);
                }
            }
            out.push('\n');
            pad(out, depth);
            out.push(')');
        }
        GoalKind::Not(inner) => {
            pad(out, depth);
            out.push_str("not (\n");
            write_goal(out, inner, depth + 1);
            out.push('\n');
            pad(out, depth);
            out.push(')');
        }
        GoalKind::IfThenElse(c, t, e) => {
            pad(out, depth);
            out.push_str("( if\n");
            write_goal(out, c, depth + 1);
            out.push('\n');
            pad(out, depth);
            out.push_str("then\n");
            write_goal(out, t, depth + 1);
            out.push('\n');
            pad(out, depth);
            out.push_str("else\n");
            write_goal(out, e, depth + 1);
            out.push('\n');
            pad(out, depth);
            out.push(')');
        }
        GoalKind::Unify(a, b) => {
            pad(out, depth);
            let _ = write!(out, "{} = {}", term_to_string(a), term_to_string(b));
        }
        GoalKind::Call(name, args) if args.len() == 2 && is_infix(name) && name != "," && name != ";" => {
            pad(out, depth);
            let _ = write!(
                out,
                "{} {} {}",
                term_to_string(&args[0]),
                name,
                term_to_string(&args[1])
            );
        }
        GoalKind::Call(name, args) => {
            pad(out, depth);
            out.push_str(&term_to_string(&Term::Compound(name.clone(), args.clone())));
        }
        GoalKind::Log(l) => {
            pad(out, depth);
            match l {
                LogGoal::Label(n) => {
                    let _ = write!(out, "log({})", n);
                }
                LogGoal::SwitchEntry(s) => {
                    let _ = write!(out, "log_switch({})", s);
                }
                LogGoal::Batch { switch, leaf } => {
                    let _ = write!(out, "log_batch({}, {})", switch, leaf);
                }
            }
        }
    }
}

pub fn clause_to_string(name: &str, clause: &Clause) -> String {
    let head = term_to_string(&Term::Compound(name.to_string(), clause.head.clone()));
    if clause.is_fact() {
        format!("{}.\n", head)
    } else {
        format!("{} :-\n{}.\n", head, goal_to_string(&clause.body, 1))
    }
}

pub fn mode_to_string(name: &str, mode: &ModeDecl) -> String {
    let args: Vec<String> = mode.arg_modes.iter().map(|m| m.to_string()).collect();
    if args.is_empty() {
        format!(":- mode {} is {}.\n", atom_to_string(name), mode.determinism)
    } else {
        format!(
            ":- mode {}({}) is {}.\n",
            atom_to_string(name),
            args.join(", "),
            mode.determinism
        )
    }
}

pub fn type_def_to_string(def: &TypeDef) -> String {
    let head = Term::Compound(
        def.name.clone(),
        def.params.iter().map(|p| Term::var(p.clone())).collect(),
    );
    let ctors: Vec<String> = def
        .constructors
        .iter()
        .map(|(n, args)| term_to_string(&Term::Compound(n.clone(), args.iter().map(|a| a.to_term()).collect())))
        .collect();
    format!(":- type {} ---> {}.\n", term_to_string(&head), ctors.join(" ; "))
}

pub fn switch_decl_to_string(tree: &SwitchTree) -> String {
    format!(":- {}.\n", term_to_string(&tree.to_decl_term()))
}

pub fn predicate_to_string(pred: &PredicateDef) -> String {
    let mut s = String::new();
    if let Some(sig) = &pred.type_sig {
        let t = Term::Compound(pred.name.clone(), sig.iter().map(|t| t.to_term()).collect());
        let _ = writeln!(s, ":- pred {}.", term_to_string(&t));
    }
    for m in &pred.modes {
        s.push_str(&mode_to_string(&pred.name, m));
    }
    if !s.is_empty() && !pred.clauses.is_empty() {
        s.push('\n');
    }
    for c in &pred.clauses {
        s.push_str(&clause_to_string(&pred.name, c));
    }
    s
}

pub fn program_to_string(p: &Program) -> String {
    let mut sections = Vec::new();
    for def in p.type_defs.values() {
        sections.push(type_def_to_string(def));
    }
    for pred in p.predicates.values() {
        sections.push(predicate_to_string(pred));
    }
    if !p.switches.is_empty() {
        sections.push(p.switches.values().map(switch_decl_to_string).collect());
    }
    sections.join("\n")
}
