use std::fmt;
use std::str::FromStr;

use super::CoverageError;
use crate::lang::{Pos, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstructKind {
    Goal,
    Disjunction,
    Switch,
    Negation,
    IfThenElse,
    Procedure,
}

impl fmt::Display for ConstructKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstructKind::Goal => "goal",
            ConstructKind::Disjunction => "disjunction",
            ConstructKind::Switch => "switch",
            ConstructKind::Negation => "negation",
            ConstructKind::IfThenElse => "if_then_else",
            ConstructKind::Procedure => "procedure",
        })
    }
}

impl FromStr for ConstructKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "goal" => ConstructKind::Goal,
            "disjunction" => ConstructKind::Disjunction,
            "switch" => ConstructKind::Switch,
            "negation" => ConstructKind::Negation,
            "if_then_else" => ConstructKind::IfThenElse,
            "procedure" => ConstructKind::Procedure,
            _ => return Err(format!("unknown construct kind `{}`", s)),
        })
    }
}

/// A counter pair: the labels just before and just after a construct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaEntry {
    pub enter: u32,
    pub exit: u32,
    pub kind: ConstructKind,
    pub proc: String,
    pub span: Span,
    /// A disjunction inside a negation or if-then-else condition that would
    /// otherwise be a switch; it is logged label by label.
    pub in_condition: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterMeta {
    pub entries: Vec<MetaEntry>,
    /// Number of labels; ids run from 1 to `label_count`.
    pub label_count: u32,
}

impl CounterMeta {
    pub fn contains_label(&self, id: u32) -> bool {
        id >= 1 && id <= self.label_count
    }

    /// `enter <TAB> exit <TAB> kind <TAB> proc <TAB> line:col <TAB> line:col`,
    /// with a seventh `condition` column for flagged entries. Every label is
    /// the enter or exit of some entry, so the label count is implied.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.enter, e.exit, e.kind, e.proc, e.span.start, e.span.end
            ));
            if e.in_condition {
                s.push_str("\tcondition");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<CounterMeta, CoverageError> {
        let mut meta = CounterMeta::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| CoverageError::MetaFormat {
                line: i + 1,
                message: m.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 && !(cols.len() == 7 && cols[6] == "condition") {
                return Err(bad("expected six tab-separated columns"));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| bad("bad label id"));
            let pos = |s: &str| -> Result<Pos, CoverageError> {
                let (l, c) = s.split_once(':').ok_or_else(|| bad("bad position"))?;
                Ok(Pos::new(
                    l.parse().map_err(|_| bad("bad line"))?,
                    c.parse().map_err(|_| bad("bad column"))?,
                ))
            };
            let entry = MetaEntry {
                enter: num(cols[0])?,
                exit: num(cols[1])?,
                kind: cols[2].parse().map_err(|e: String| bad(&e))?,
                proc: cols[3].to_string(),
                span: Span::new(pos(cols[4])?, pos(cols[5])?),
                in_condition: cols.len() == 7,
            };
            meta.label_count = meta.label_count.max(entry.enter).max(entry.exit);
            meta.entries.push(entry);
        }
        Ok(meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_file_round_trips() {
        let meta = CounterMeta {
            entries: vec![
                MetaEntry {
                    enter: 1,
                    exit: 4,
                    kind: ConstructKind::Procedure,
                    proc: "p__m0".into(),
                    span: Span::new(Pos::new(1, 1), Pos::new(2, 10)),
                    in_condition: false,
                },
                MetaEntry {
                    enter: 2,
                    exit: 3,
                    kind: ConstructKind::Disjunction,
                    proc: "p__m0".into(),
                    span: Span::new(Pos::new(2, 5), Pos::new(2, 9)),
                    in_condition: true,
                },
            ],
            label_count: 4,
        };
        let text = meta.to_file_string();
        assert!(text.contains("1\t4\tprocedure\tp__m0\t1:1\t2:10\n"));
        assert_eq!(CounterMeta::parse(&text).unwrap(), meta);
    }

    #[test]
    fn malformed_meta_is_rejected() {
        assert!(CounterMeta::parse("1\t2\tgoal\n").is_err());
        assert!(CounterMeta::parse("1\t2\tloop\tp\t1:1\t1:2\n").is_err());
    }
}
