//! Switch recognition and the switch model tree used for batch logging.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{unify, Bindings};
use crate::lang::{Goal, GoalKind, Symbol, Term};

/// How a disjunction is a switch, in terms of the conjuncts of its disjuncts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchShape {
    /// The bound variable whose value selects the disjunct.
    pub var: String,
    pub branches: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    /// Number of leading unifications that belong to the tree.
    pub prefix: usize,
    /// A disjunction right after the prefix, switching on the same variable.
    pub nested: Option<SwitchShape>,
}

/// Recognizes a switch: every disjunct starts with unifications among which the
/// same bound variable (or an alias of it) is tested against a function symbol,
/// and the symbols are pairwise distinct. Candidate variables are tried in name order.
pub fn detect_switch(disjuncts: &[Goal], bound: &BTreeSet<String>) -> Option<SwitchShape> {
    let mut used = Vec::new();
    for d in disjuncts {
        d.collect_vars(&mut used);
    }
    let candidates: BTreeSet<&String> = used.iter().filter(|v| bound.contains(*v)).collect();
    for v in candidates {
        let class = BTreeSet::from([v.clone()]);
        if let Some((mut shape, _)) = shape_on(disjuncts, &class, bound) {
            shape.var = v.clone();
            return Some(shape);
        }
    }
    None
}

fn shape_on(
    disjuncts: &[Goal],
    class: &BTreeSet<String>,
    bound: &BTreeSet<String>,
) -> Option<(SwitchShape, Vec<Symbol>)> {
    let mut branches = Vec::new();
    let mut symbols: Vec<Symbol> = Vec::new();
    for d in disjuncts {
        let (b, syms) = branch(d.conjuncts(), class.clone(), bound.clone())?;
        for s in syms {
            if symbols.contains(&s) {
                return None;
            }
            symbols.push(s);
        }
        branches.push(b);
    }
    let var = class.iter().next().cloned().unwrap_or_default();
    Some((SwitchShape { var, branches }, symbols))
}

fn branch(goals: &[Goal], mut class: BTreeSet<String>, mut bound: BTreeSet<String>) -> Option<(Branch, Vec<Symbol>)> {
    let mut tested: Option<Symbol> = None;
    let mut i = 0;
    while i < goals.len() {
        match &goals[i].kind {
            GoalKind::Unify(a, b) => {
                match (a, b) {
                    (Term::Var(x), Term::Var(y)) => {
                        if class.contains(x) || class.contains(y) {
                            class.insert(x.clone());
                            class.insert(y.clone());
                        }
                    }
                    (Term::Var(x), t) | (t, Term::Var(x)) if tested.is_none() && class.contains(x) => {
                        tested = t.symbol();
                    }
                    _ => {}
                }
                bound.extend(a.vars());
                bound.extend(b.vars());
            }
            GoalKind::Disj(inner) if tested.is_none() => {
                let (shape, syms) = shape_on(inner, &class, &bound)?;
                return Some((
                    Branch {
                        prefix: i,
                        nested: Some(shape),
                    },
                    syms,
                ));
            }
            _ => break,
        }
        i += 1;
    }
    tested.map(|s| {
        (
            Branch {
                prefix: i,
                nested: None,
            },
            vec![s],
        )
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchNode {
    pub label: u32,
    pub parent: Option<u32>,
    /// The unification between the parent label and this one.
    pub edge: Option<(Term, Term)>,
}

/// Model of a switch: labels as nodes, prefix unifications as edges.
/// Nodes are stored in depth-first, disjunct order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchTree {
    pub id: u32,
    /// Variables bound on entry that the edges refer to.
    pub entry_vars: Vec<String>,
    pub nodes: Vec<SwitchNode>,
    pub leaves: Vec<u32>,
}

/// Label sequences to log when execution reaches each leaf.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<(u32, Vec<u32>)>,
    /// Logged on switch entry when no leaf is reachable.
    pub pre_switch: Vec<u32>,
}

impl BatchPlan {
    pub fn batch_for(&self, leaf: u32) -> Option<&[u32]> {
        self.batches.iter().find(|(l, _)| *l == leaf).map(|(_, b)| b.as_slice())
    }
}

impl SwitchTree {
    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().map(|n| n.label)
    }

    pub fn contains(&self, label: u32) -> bool {
        self.nodes.iter().any(|n| n.label == label)
    }

    /// Depth-first listing of the node labels.
    pub fn simplified_execution_path(&self) -> Vec<u32> {
        self.labels().collect()
    }

    /// Marks roots and, recursively, the targets of successful edges below
    /// marked nodes. `edge_ok` is keyed by the edge's target label.
    pub fn mark(&self, edge_ok: &BTreeMap<u32, bool>) -> BTreeSet<u32> {
        let mut marked = BTreeSet::new();
        for n in &self.nodes {
            let ok = match (&n.parent, &n.edge) {
                (None, _) => true,
                (Some(p), None) => marked.contains(p),
                (Some(p), Some(_)) => marked.contains(p) && edge_ok.get(&n.label).copied().unwrap_or(false),
            };
            if ok {
                marked.insert(n.label);
            }
        }
        marked
    }

    pub fn mark_and_batch(&self, edge_ok: &BTreeMap<u32, bool>) -> BatchPlan {
        let marked = self.mark(edge_ok);
        let mut plan = BatchPlan::default();
        let mut acc = Vec::new();
        for n in &self.nodes {
            if !marked.contains(&n.label) {
                continue;
            }
            acc.push(n.label);
            if self.leaves.contains(&n.label) {
                plan.batches.push((n.label, std::mem::take(&mut acc)));
            }
        }
        if !acc.is_empty() {
            match plan.batches.last_mut() {
                Some((_, last)) => last.extend(acc),
                None => plan.pre_switch = acc,
            }
        }
        plan
    }

    /// Evaluates every edge along its path, starting from the entry bindings.
    pub fn edge_outcomes(&self, entry: &Bindings) -> BTreeMap<u32, bool> {
        let mut env: BTreeMap<u32, Bindings> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            let here = match (&n.parent, &n.edge) {
                (None, _) => Some(entry.clone()),
                (Some(p), None) => env.get(p).cloned(),
                (Some(p), Some((a, b))) => env.get(p).and_then(|b0| unify(a, b, b0)),
            };
            if n.edge.is_some() {
                out.insert(n.label, here.is_some());
            }
            if let Some(b) = here {
                env.insert(n.label, b);
            }
        }
        out
    }

    /// The batch plan for the given values of the entry variables.
    pub fn plan(&self, entry: &Bindings) -> BatchPlan {
        self.mark_and_batch(&self.edge_outcomes(entry))
    }

    /// `switch(Id, [Vars], [n(Label, Parent, Edge), ...], [Leaves])`, with
    /// parent `0` for roots and edge `true` when there is none.
    pub fn to_decl_term(&self) -> Term {
        let nodes = self.nodes.iter().map(|n| {
            let edge = match &n.edge {
                Some((a, b)) => Term::compound("=", vec![a.clone(), b.clone()]),
                None => Term::atom("true"),
            };
            Term::compound(
                "n",
                vec![Term::Int(n.label as i64), Term::Int(n.parent.unwrap_or(0) as i64), edge],
            )
        });
        Term::compound(
            "switch",
            vec![
                Term::Int(self.id as i64),
                Term::list(self.entry_vars.iter().map(|v| Term::var(v.clone())), None),
                Term::list(nodes, None),
                Term::list(self.leaves.iter().map(|l| Term::Int(*l as i64)), None),
            ],
        )
    }

    pub fn from_decl_term(t: &Term) -> Result<SwitchTree, String> {
        let bad = || format!("malformed switch declaration `{}`", t);
        let Term::Compound(name, args) = t else {
            return Err(bad());
        };
        if name != "switch" || args.len() != 4 {
            return Err(bad());
        }
        let label = |t: &Term| match t {
            Term::Int(i) if *i > 0 && *i <= u32::MAX as i64 => Ok(*i as u32),
            _ => Err(bad()),
        };
        let id = label(&args[0])?;
        let entry_vars = args[1]
            .list_items()
            .ok_or_else(bad)?
            .into_iter()
            .map(|v| v.as_var().map(str::to_string).ok_or_else(bad))
            .collect::<Result<Vec<_>, _>>()?;
        let mut nodes = Vec::new();
        for n in args[2].list_items().ok_or_else(bad)? {
            let Term::Compound(f, a) = n else { return Err(bad()) };
            if f != "n" || a.len() != 3 {
                return Err(bad());
            }
            let parent = match &a[1] {
                Term::Int(0) => None,
                p => Some(label(p)?),
            };
            let edge = match &a[2] {
                Term::Compound(e, ea) if e == "=" && ea.len() == 2 => Some((ea[0].clone(), ea[1].clone())),
                Term::Compound(e, ea) if e == "true" && ea.is_empty() => None,
                _ => return Err(bad()),
            };
            nodes.push(SwitchNode {
                label: label(&a[0])?,
                parent,
                edge,
            });
        }
        let leaves = args[3]
            .list_items()
            .ok_or_else(bad)?
            .into_iter()
            .map(label)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SwitchTree {
            id,
            entry_vars,
            nodes,
            leaves,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_term;

    fn edge(a: &str, b: &str) -> Option<(Term, Term)> {
        Some((parse_term(a).unwrap(), parse_term(b).unwrap()))
    }

    fn node(label: u32, parent: u32, e: Option<(Term, Term)>) -> SwitchNode {
        SwitchNode {
            label,
            parent: (parent > 0).then_some(parent),
            edge: e,
        }
    }

    /// The tree of the reference-manual switch on X (labels as in its naive labelling).
    pub(crate) fn reference_tree() -> SwitchTree {
        SwitchTree {
            id: 1,
            entry_vars: vec!["X".into()],
            nodes: vec![
                node(1, 0, None),
                node(2, 1, edge("X", "f")),
                node(4, 0, None),
                node(5, 4, edge("Y", "X")),
                node(6, 5, None),
                node(7, 6, edge("Y", "g")),
                node(8, 7, edge("Intermediate", "42")),
                node(9, 5, None),
                node(10, 9, edge("Z", "Y")),
                node(11, 10, edge("Z", "h(Arg)")),
            ],
            leaves: vec![2, 8, 11],
        }
    }

    fn outcomes(failing: &[u32]) -> BTreeMap<u32, bool> {
        [2, 5, 7, 8, 10, 11]
            .into_iter()
            .map(|l| (l, !failing.contains(&l)))
            .collect()
    }

    #[test]
    fn simplified_path_is_depth_first() {
        assert_eq!(
            reference_tree().simplified_execution_path(),
            vec![1, 2, 4, 5, 6, 7, 8, 9, 10, 11]
        );
    }

    #[test]
    fn batches_when_every_edge_succeeds() {
        let plan = reference_tree().mark_and_batch(&outcomes(&[]));
        assert_eq!(
            plan.batches,
            vec![(2, vec![1, 2]), (8, vec![4, 5, 6, 7, 8]), (11, vec![9, 10, 11])]
        );
        assert!(plan.pre_switch.is_empty());
    }

    #[test]
    fn failing_first_test_moves_root_into_next_batch() {
        let plan = reference_tree().mark_and_batch(&outcomes(&[2]));
        assert_eq!(plan.batches, vec![(8, vec![1, 4, 5, 6, 7, 8]), (11, vec![9, 10, 11])]);
    }

    #[test]
    fn failing_last_segment_joins_previous_batch() {
        let plan = reference_tree().mark_and_batch(&outcomes(&[2, 11]));
        assert_eq!(plan.batches, vec![(8, vec![1, 4, 5, 6, 7, 8, 9, 10])]);
    }

    #[test]
    fn no_reachable_leaf_gives_pre_switch_batch() {
        let plan = reference_tree().mark_and_batch(&outcomes(&[2, 7, 11]));
        assert!(plan.batches.is_empty());
        assert_eq!(plan.pre_switch, vec![1, 4, 5, 6, 9, 10]);
    }

    #[test]
    fn edges_are_evaluated_from_entry_values() {
        let tree = reference_tree();
        let mut entry = Bindings::new();
        entry.bind("X", parse_term("g").unwrap());
        assert_eq!(tree.plan(&entry).batches, vec![(8, vec![1, 4, 5, 6, 7, 8, 9, 10])]);
        let mut entry = Bindings::new();
        entry.bind("X", parse_term("h(3)").unwrap());
        assert_eq!(tree.plan(&entry).batches, vec![(11, vec![1, 4, 5, 6, 9, 10, 11])]);
    }

    #[test]
    fn declaration_round_trips() {
        let tree = reference_tree();
        assert_eq!(SwitchTree::from_decl_term(&tree.to_decl_term()).unwrap(), tree);
        let text = crate::lang::term_to_string(&tree.to_decl_term());
        assert_eq!(SwitchTree::from_decl_term(&parse_term(&text).unwrap()).unwrap(), tree);
    }

    #[test]
    fn repeated_symbols_are_not_a_switch() {
        let d = crate::lang::parse_goal("(X = f, p ; X = f, q)").unwrap();
        let GoalKind::Disj(ds) = d.kind else { panic!() };
        assert_eq!(detect_switch(&ds, &BTreeSet::from(["X".to_string()])), None);
    }

    #[test]
    fn call_before_test_is_not_a_switch() {
        let d = crate::lang::parse_goal("(p, X = f ; X = g)").unwrap();
        let GoalKind::Disj(ds) = d.kind else { panic!() };
        assert_eq!(detect_switch(&ds, &BTreeSet::from(["X".to_string()])), None);
    }
}
