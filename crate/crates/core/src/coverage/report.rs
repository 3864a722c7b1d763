use std::collections::BTreeMap;
use std::fmt;

use super::meta::{ConstructKind, CounterMeta, MetaEntry};
use super::CoverageError;
use crate::engine::LogEvent;
use crate::lang::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoverageDegree {
    Covered,
    PartiallyCovered,
    NotCovered,
}

impl CoverageDegree {
    pub fn from_counts(enter: u64, exit: u64) -> CoverageDegree {
        if exit > 0 {
            CoverageDegree::Covered
        } else if enter > 0 {
            CoverageDegree::PartiallyCovered
        } else {
            CoverageDegree::NotCovered
        }
    }

    /// CSS class used in the HTML view.
    pub fn css_class(self) -> &'static str {
        match self {
            CoverageDegree::Covered => "covered",
            CoverageDegree::PartiallyCovered => "partial",
            CoverageDegree::NotCovered => "uncovered",
        }
    }
}

impl fmt::Display for CoverageDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageDegree::Covered => "covered",
            CoverageDegree::PartiallyCovered => "partially_covered",
            CoverageDegree::NotCovered => "not_covered",
        })
    }
}

/// Label counts, indexed by label id (index 0 unused).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts(Vec<u64>);

impl Counts {
    pub fn zero(label_count: u32) -> Counts {
        Counts(vec![0; label_count as usize + 1])
    }

    pub fn get(&self, label: u32) -> u64 {
        self.0.get(label as usize).copied().unwrap_or(0)
    }

    fn bump(&mut self, label: u32) -> Result<(), CoverageError> {
        match self.0.get_mut(label as usize) {
            Some(c) if label > 0 => {
                *c += 1;
                Ok(())
            }
            _ => Err(CoverageError::UnknownLabel(label)),
        }
    }

    pub fn add_event(&mut self, e: &LogEvent) -> Result<(), CoverageError> {
        match e {
            LogEvent::Label(l) => self.bump(*l),
            LogEvent::Batch(ls) => ls.iter().try_for_each(|l| self.bump(*l)),
        }
    }

    /// `(label, count)` for every label.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.0.iter().enumerate().skip(1).map(|(i, c)| (i as u32, *c))
    }
}

/// Parses a log file of `L <id>` and `B <id>,<id>,...` lines.
pub fn parse_log(text: &str) -> Result<Vec<LogEvent>, CoverageError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CoverageError::LogFormat {
            line: i + 1,
            message: format!("malformed event `{}`", line),
        };
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        let id = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
        match tag {
            "L" => events.push(LogEvent::Label(id(rest)?)),
            "B" => {
                let ids = if rest.trim().is_empty() {
                    Vec::new()
                } else {
                    rest.split(',').map(id).collect::<Result<_, _>>()?
                };
                events.push(LogEvent::Batch(ids));
            }
            _ => return Err(bad()),
        }
    }
    Ok(events)
}

pub fn replay_events(events: &[LogEvent], meta: &CounterMeta) -> Result<Counts, CoverageError> {
    let mut counts = Counts::zero(meta.label_count);
    for e in events {
        counts.add_event(e)?;
    }
    Ok(counts)
}

pub fn replay_log(text: &str, meta: &CounterMeta) -> Result<Counts, CoverageError> {
    replay_events(&parse_log(text)?, meta)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportEntry {
    pub meta: MetaEntry,
    pub enter_count: u64,
    pub exit_count: u64,
    pub degree: CoverageDegree,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub entries: Vec<ReportEntry>,
}

impl CoverageReport {
    pub fn count(&self, degree: CoverageDegree) -> usize {
        self.entries.iter().filter(|e| e.degree == degree).count()
    }
}

pub fn classify(counts: &Counts, meta: &CounterMeta) -> CoverageReport {
    let entries = meta
        .entries
        .iter()
        .map(|m| {
            let (enter_count, exit_count) = (counts.get(m.enter), counts.get(m.exit));
            ReportEntry {
                meta: m.clone(),
                enter_count,
                exit_count,
                degree: CoverageDegree::from_counts(enter_count, exit_count),
            }
        })
        .collect();
    CoverageReport { entries }
}

pub const DETAIL_HEADER: &str = "enter\texit\tkind\tprocedure\tspan\tenter_count\texit_count\tdegree\tflags";

/// One tab-separated line per counter pair, after a header line.
pub fn emit_detail_report(report: &CoverageReport) -> String {
    let mut s = String::from(DETAIL_HEADER);
    s.push('\n');
    for e in &report.entries {
        let m = &e.meta;
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            m.enter,
            m.exit,
            m.kind,
            m.proc,
            m.span,
            e.enter_count,
            e.exit_count,
            e.degree,
            if m.in_condition { "condition" } else { "-" }
        ));
    }
    s
}

const STYLE: &str = "body { font-family: sans-serif; }\n\
pre { font-family: monospace; line-height: 1.4; }\n\
.covered { background-color: #b6f2b6; }\n\
.partial { background-color: #fff3a0; }\n\
.uncovered { background-color: #f5b5b5; }\n";

fn char_offset(line_starts: &[usize], len: usize, p: Pos) -> usize {
    let line = (p.line as usize).saturating_sub(1);
    match line_starts.get(line) {
        Some(s) => (s + (p.col as usize).saturating_sub(1)).min(len),
        None => len,
    }
}

fn escape_into(out: &mut String, c: char) {
    match c {
        '<' => out.push_str("&lt;"),
        '>' => out.push_str("&gt;"),
        '&' => out.push_str("&amp;"),
        '"' => out.push_str("&quot;"),
        _ => out.push(c),
    }
}

/// Colours goal spans of `source`. Entries sharing a span (the same goal
/// in several modes) are merged by summing their counts; where spans nest,
/// the innermost one decides the colour.
pub fn emit_html(report: &CoverageReport, source: &str) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut line_starts = vec![0];
    for (i, c) in chars.iter().enumerate() {
        if *c == '\n' {
            line_starts.push(i + 1);
        }
    }

    let mut merged: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for e in report.entries.iter().filter(|e| e.meta.kind == ConstructKind::Goal) {
        let a = char_offset(&line_starts, chars.len(), e.meta.span.start);
        let b = char_offset(&line_starts, chars.len(), e.meta.span.end);
        if a < b {
            let slot = merged.entry((a, b)).or_default();
            slot.0 += e.enter_count;
            slot.1 += e.exit_count;
        }
    }

    // Paint outermost first so inner spans overwrite.
    let mut spans: Vec<((usize, usize), CoverageDegree)> = merged
        .into_iter()
        .map(|(k, (n, x))| (k, CoverageDegree::from_counts(n, x)))
        .collect();
    spans.sort_by_key(|((a, b), _)| (std::cmp::Reverse(b - a), *a));
    let mut paint: Vec<Option<CoverageDegree>> = vec![None; chars.len()];
    for ((a, b), d) in spans {
        for p in &mut paint[a..b] {
            *p = Some(d);
        }
    }

    let mut body = String::new();
    let mut current: Option<CoverageDegree> = None;
    for (c, p) in chars.iter().zip(&paint) {
        if *p != current {
            if current.is_some() {
                body.push_str("</span>");
            }
            if let Some(d) = p {
                body.push_str(&format!("<span class=\"{}\">", d.css_class()));
            }
            current = *p;
        }
        escape_into(&mut body, *c);
    }
    if current.is_some() {
        body.push_str("</span>");
    }

    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Coverage</title>\n<style>\n{}</style>\n</head>\n<body>\n<pre>{}</pre>\n</body>\n</html>\n",
        STYLE, body
    )
}
