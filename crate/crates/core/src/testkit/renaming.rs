use std::collections::HashMap;

use indexmap::IndexMap;

use super::suite::TestCase;
use super::TestkitError;
use crate::lang::{Goal, GoalKind, ModeDecl, PredKey, Span};
use crate::modes::{compile_query_in, Bound, ModeEnv, ModeError, ProcTable, RenamingTable};

/// Call sites are identified by span and arity; normalization keeps both.
fn rename_calls(g: &mut Goal, names: &HashMap<(Span, usize), String>) {
    let span = g.span;
    match &mut g.kind {
        GoalKind::Call(name, args) => {
            if let Some(new) = names.get(&(span, args.len())) {
                *name = new.clone();
            }
        }
        GoalKind::Conj(gs) | GoalKind::Disj(gs) => gs.iter_mut().for_each(|g| rename_calls(g, names)),
        GoalKind::Not(c) => rename_calls(c, names),
        GoalKind::IfThenElse(c, t, e) => {
            rename_calls(c, names);
            rename_calls(t, names);
            rename_calls(e, names);
        }
        GoalKind::Unify(..) | GoalKind::Log(_) => {}
    }
}

/// Rewrites calls in test code to the procedures named by `renaming`,
/// choosing the row whose mode fits the call's instantiation. `table`
/// supplies the modes of the renamed procedures.
pub fn apply_renaming(
    cases: &[TestCase],
    renaming: &RenamingTable,
    table: &ProcTable,
) -> Result<Vec<TestCase>, TestkitError> {
    if renaming.is_empty() {
        return Ok(cases.to_vec());
    }
    let mut by_pred: IndexMap<PredKey, Vec<(usize, String)>> = IndexMap::new();
    for e in &renaming.entries {
        by_pred
            .entry(e.pred.clone())
            .or_default()
            .push((e.mode_index, e.proc_name.clone()));
    }
    let mut env = ModeEnv::from_table(table);
    for (pred, mut rows) in by_pred {
        rows.sort();
        let mut decls = Vec::new();
        for (_, name) in rows {
            let proc = table
                .get(&name)
                .ok_or_else(|| TestkitError::Renaming(format!("unknown procedure {}", name)))?;
            let mode = proc.mode();
            if let Some((_, other)) = decls
                .iter()
                .find(|(m, _): &&(ModeDecl, String)| m.arg_modes == mode.arg_modes)
            {
                return Err(ModeError::Ambiguous {
                    pred,
                    candidates: vec![other.clone(), name],
                }
                .into());
            }
            decls.push((mode, name));
        }
        env.insert(pred, decls);
    }

    let mut out = Vec::new();
    for case in cases {
        let compiled = compile_query_in(&env, &case.code_goal(), &Bound::new()).map_err(|e| TestkitError::Mode {
            test: case.name.clone(),
            source: e,
        })?;
        let mut names = HashMap::new();
        compiled.walk(&mut |g| {
            if let GoalKind::Call(name, args) = &g.kind {
                names.insert((g.span, args.len()), name.clone());
            }
        });
        let mut case = case.clone();
        case.code.iter_mut().for_each(|g| rename_calls(g, &names));
        out.push(case);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{goal_to_string, parse_program};
    use crate::modes::{analyze, ProcTable};
    use crate::testkit::parse_testsuite;

    const MEMBER: &str = "
:- mode member(in, in) is semidet.
:- mode member(out, in) is nondet.
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
";

    /// The split program with its origins dropped, as read back from disk.
    fn split() -> (ProcTable, RenamingTable) {
        let table = analyze(&parse_program(MEMBER).unwrap()).unwrap();
        let flat = ProcTable::from_procedural(&table.to_program()).unwrap();
        (flat, table.renaming)
    }

    fn code(cases: &[TestCase]) -> String {
        goal_to_string(&cases[0].code_goal(), 0)
    }

    #[test]
    fn calls_follow_their_instantiation() {
        let (table, renaming) = split();
        let cases = parse_testsuite("test(t, [member(X,[1,2])], []).").unwrap();
        assert_eq!(
            code(&apply_renaming(&cases, &renaming, &table).unwrap()),
            "member__m1(X, [1, 2])"
        );
        let cases = parse_testsuite("test(t, [member(1,[1,2])], []).").unwrap();
        assert_eq!(
            code(&apply_renaming(&cases, &renaming, &table).unwrap()),
            "member__m0(1, [1, 2])"
        );
    }

    #[test]
    fn empty_table_and_unknown_calls_are_identity() {
        let (table, renaming) = split();
        let cases = parse_testsuite("test(t, [member(X,[1,2])], []).").unwrap();
        assert_eq!(
            apply_renaming(&cases, &RenamingTable::default(), &table).unwrap(),
            cases
        );
        let cases = parse_testsuite("test(t, [X = 1, X > 0], []).").unwrap();
        assert_eq!(apply_renaming(&cases, &renaming, &table).unwrap(), cases);
    }

    #[test]
    fn rows_with_equal_modes_are_ambiguous() {
        let src = ":- mode p(in) is semidet.\np(1).\n:- mode q(in) is semidet.\nq(2).\n";
        let table = analyze(&parse_program(src).unwrap()).unwrap();
        let renaming = RenamingTable::parse("r/1\t0\tp__m0\nr/1\t1\tq__m0\n").unwrap();
        assert!(matches!(
            apply_renaming(&[], &renaming, &table),
            Err(TestkitError::Modes(ModeError::Ambiguous { .. }))
        ));
        let (table, _) = split();
        let renaming = RenamingTable::parse("member/2\t0\tmember__m9\n").unwrap();
        assert!(matches!(
            apply_renaming(&[], &renaming, &table),
            Err(TestkitError::Renaming(_))
        ));
    }
}
