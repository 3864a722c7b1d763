use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;

use super::ModeError;
use crate::coverage::SwitchTree;
use crate::lang::{
    ArgMode, Clause, Determinism, Goal, ModeDecl, PredKey, PredicateDef, Program, Span, Term, TypeDef, TypeExpr,
};

/// Which predicate and mode declaration a procedure was produced from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Origin {
    pub pred: PredKey,
    pub mode_index: usize,
}

/// A clause of a procedure: distinct head variables and a normalized, ordered body.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcClause {
    pub head: Vec<String>,
    pub body: Goal,
    pub span: Span,
}

/// A single mode of a predicate, under its own unique name.
#[derive(Clone, Debug, PartialEq)]
pub struct Procedure {
    pub name: String,
    pub origin: Option<Origin>,
    pub arg_modes: Vec<ArgMode>,
    pub determinism: Determinism,
    pub clauses: Vec<ProcClause>,
    pub type_sig: Option<Vec<TypeExpr>>,
}

impl Procedure {
    pub fn arity(&self) -> usize {
        self.arg_modes.len()
    }

    pub fn mode(&self) -> ModeDecl {
        ModeDecl::new(self.arg_modes.clone(), self.determinism)
    }

    /// The procedure as a single-mode predicate definition.
    pub fn to_predicate(&self) -> PredicateDef {
        PredicateDef {
            name: self.name.clone(),
            arity: self.arity(),
            clauses: self
                .clauses
                .iter()
                .map(|c| Clause {
                    head: c.head.iter().map(|v| Term::var(v.clone())).collect(),
                    head_spans: vec![c.span; c.head.len()],
                    body: c.body.clone(),
                    span: c.span,
                })
                .collect(),
            modes: vec![self.mode()],
            type_sig: self.type_sig.clone(),
        }
    }
}

/// Name of the procedure for mode `index` of predicate `name`.
pub fn proc_name(name: &str, index: usize) -> String {
    format!("{}__m{}", name, index)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenameEntry {
    pub pred: PredKey,
    pub mode_index: usize,
    pub proc_name: String,
}

/// Mapping from (predicate, mode index) to procedure name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RenamingTable {
    pub entries: Vec<RenameEntry>,
}

impl RenamingTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rows_for<'a>(&'a self, name: &'a str, arity: usize) -> impl Iterator<Item = &'a RenameEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.pred.name == name && e.pred.arity == arity)
    }

    /// One `name/arity <TAB> mode_index <TAB> new_name` record per line.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.pred, e.mode_index, e.proc_name));
        }
        s
    }

    pub fn parse(text: &str) -> Result<RenamingTable, ModeError> {
        let mut entries: Vec<RenameEntry> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |why: &str| ModeError::RenamingFile {
                line: i + 1,
                message: why.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad("expected three tab-separated columns"));
            }
            let (name, arity) = cols[0].rsplit_once('/').ok_or_else(|| bad("expected name/arity"))?;
            let arity = arity.parse::<usize>().map_err(|_| bad("arity is not a number"))?;
            let mode_index = cols[1]
                .parse::<usize>()
                .map_err(|_| bad("mode index is not a number"))?;
            if cols[2].is_empty() {
                return Err(bad("empty procedure name"));
            }
            if entries.iter().any(|e| e.proc_name == cols[2]) {
                return Err(bad("procedure name is not unique"));
            }
            entries.push(RenameEntry {
                pred: PredKey::new(name, arity),
                mode_index,
                proc_name: cols[2].to_string(),
            });
        }
        Ok(RenamingTable { entries })
    }
}

impl fmt::Display for RenamingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_file_string())
    }
}

/// Procedures ready for execution, with the declarations they need at run time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProcTable {
    pub procs: IndexMap<String, Procedure>,
    pub switches: BTreeMap<u32, SwitchTree>,
    pub type_defs: IndexMap<String, TypeDef>,
    pub renaming: RenamingTable,
}

impl ProcTable {
    pub fn new(procs: Vec<Procedure>) -> ProcTable {
        ProcTable {
            procs: procs.into_iter().map(|p| (p.name.clone(), p)).collect(),
            ..ProcTable::default()
        }
    }

    pub fn get(&self, name: &str) -> Option<&Procedure> {
        self.procs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Procedure> {
        self.procs.values()
    }

    /// The table as a program of single-mode predicates, for printing.
    pub fn to_program(&self) -> Program {
        Program {
            type_defs: self.type_defs.clone(),
            predicates: self
                .procs
                .values()
                .map(|p| (PredKey::new(p.name.clone(), p.arity()), p.to_predicate()))
                .collect(),
            switches: self.switches.clone(),
        }
    }

    /// Loads a program that is already split into single-mode procedures with
    /// ordered bodies, such as an instrumented program written by this crate.
    pub fn from_procedural(program: &Program) -> Result<ProcTable, ModeError> {
        let mut procs = Vec::new();
        for pred in program.predicates.values() {
            let [mode] = pred.modes.as_slice() else {
                return Err(ModeError::NotProcedural(pred.key()));
            };
            let mut clauses = Vec::new();
            for c in &pred.clauses {
                let mut head = Vec::new();
                for t in &c.head {
                    match t {
                        Term::Var(v) if !head.contains(v) => head.push(v.clone()),
                        _ => return Err(ModeError::NotProcedural(pred.key())),
                    }
                }
                clauses.push(ProcClause {
                    head,
                    body: c.body.clone(),
                    span: c.span,
                });
            }
            procs.push(Procedure {
                name: pred.name.clone(),
                origin: None,
                arg_modes: mode.arg_modes.clone(),
                determinism: mode.determinism,
                clauses,
                type_sig: pred.type_sig.clone(),
            });
        }
        let mut table = ProcTable::new(procs);
        table.switches = program.switches.clone();
        table.type_defs = program.type_defs.clone();
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renaming_file_round_trips() {
        let t = RenamingTable {
            entries: vec![
                RenameEntry {
                    pred: PredKey::new("append", 3),
                    mode_index: 0,
                    proc_name: "append__m0".into(),
                },
                RenameEntry {
                    pred: PredKey::new("append", 3),
                    mode_index: 1,
                    proc_name: "append__m1".into(),
                },
            ],
        };
        let text = t.to_file_string();
        assert_eq!(text, "append/3\t0\tappend__m0\nappend/3\t1\tappend__m1\n");
        assert_eq!(RenamingTable::parse(&text).unwrap(), t);
    }

    #[test]
    fn renaming_file_rejects_duplicates_and_bad_rows() {
        assert!(RenamingTable::parse("p/1\t0\tq\np/1\t1\tq\n").is_err());
        assert!(RenamingTable::parse("p/1 0 q\n").is_err());
        assert!(RenamingTable::parse("p\t0\tq\n").is_err());
    }
}
