//! Design-time compilation of a [`VfGraph`] into a decision tree that
//! dispatches a context to its ordered candidate frames in `O(depth)`.

mod baseline;
mod cells;
mod heatmap;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::frames::{frame_covers, Domain, FrameId, PropertySet, ValidityFrame};
use crate::vfg::{Context, VfGraph};

pub use baseline::graph_search_baseline;
pub use cells::{enumerate_contexts, factor_cells, Cell};
pub use heatmap::{expected_path_length, order_factors_by_heatmap, ContextCell, HeatMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("factor ordering is missing `{0}`")]
    MissingFromOrdering(String),
    #[error("factor `{0}` appears twice in the ordering")]
    DuplicateInOrdering(String),
    #[error("context is missing factor `{0}`")]
    MissingFactor(String),
    #[error("value for factor `{0}` matches no branch")]
    ValueKind(String),
    #[error("no feasible model for this context")]
    NoFeasibleModel { nodes_visited: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// Cheapest worst-case cost first.
    pub candidates: Vec<FrameId>,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Test { factor: String, branches: Vec<(Cell, Node)> },
    Leaf(Leaf),
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Test { branches, .. } => 1 + branches.iter().map(|(_, n)| n.depth()).max().unwrap_or(0),
        }
    }

    fn for_each_leaf_mut(&mut self, f: &mut impl FnMut(&mut Leaf)) {
        match self {
            Node::Leaf(l) => f(l),
            Node::Test { branches, .. } => branches.iter_mut().for_each(|(_, n)| n.for_each_leaf_mut(f)),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Test { branches, .. } => branches.iter().for_each(|(_, n)| n.leaves(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: Node,
    depth: usize,
    costs: BTreeMap<FrameId, f64>,
    pairs: Vec<(FrameId, FrameId)>,
    ordering: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub candidates: Vec<FrameId>,
    pub nodes_visited: usize,
}

impl DecisionTree {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ordering(&self) -> &[String] {
        &self.ordering
    }

    pub fn wcet(&self, id: &FrameId) -> Option<f64> {
        self.costs.get(id).copied()
    }

    /// `(original, approximated)` pairs joined by an approximation edge.
    pub fn approximation_pairs(&self) -> &[(FrameId, FrameId)] {
        &self.pairs
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    pub fn infeasible_leaves(&self) -> usize {
        self.leaves().iter().filter(|l| l.infeasible).count()
    }

    /// First approximation pair with both members in `candidates`.
    pub fn pair_in<'a>(&'a self, candidates: &[FrameId]) -> Option<&'a (FrameId, FrameId)> {
        self.pairs
            .iter()
            .filter(|(o, a)| candidates.contains(o) && candidates.contains(a))
            .min_by(|x, y| {
                let c = |id: &FrameId| self.costs.get(id).copied().unwrap_or(f64::INFINITY);
                c(&x.1).total_cmp(&c(&y.1)).then_with(|| x.cmp(y))
            })
    }

    /// Extra cost charged to `frame` because selecting among `candidates`
    /// runs it alongside its approximation partner.
    pub fn comparison_overhead(&self, candidates: &[FrameId], frame: &FrameId) -> f64 {
        self.pairs
            .iter()
            .filter_map(|(o, a)| {
                if o == frame && candidates.contains(a) {
                    self.costs.get(a).copied()
                } else if a == frame && candidates.contains(o) {
                    self.costs.get(o).copied()
                } else {
                    None
                }
            })
            .fold(0.0, f64::max)
    }

    fn descend(&self, context: &Context) -> Result<(&Leaf, usize), CompileError> {
        let mut node = &self.root;
        let mut visited = 0;
        loop {
            match node {
                Node::Leaf(leaf) => return Ok((leaf, visited)),
                Node::Test { factor, branches } => {
                    visited += 1;
                    let value = context.get(factor).ok_or_else(|| CompileError::MissingFactor(factor.clone()))?;
                    node = branches
                        .iter()
                        .find(|(cell, _)| cell.contains(value))
                        .map(|(_, n)| n)
                        .ok_or_else(|| CompileError::ValueKind(factor.clone()))?;
                }
            }
        }
    }

    /// Nodes visited on the way to `context`'s leaf, feasible or not.
    pub fn path_length(&self, context: &Context) -> Result<usize, CompileError> {
        self.descend(context).map(|(_, n)| n)
    }
}

/// Follows the single root-to-leaf path selected by `context`.
pub fn lookup(tree: &DecisionTree, context: &Context) -> Result<Lookup, CompileError> {
    let (leaf, nodes_visited) = tree.descend(context)?;
    if leaf.infeasible {
        return Err(CompileError::NoFeasibleModel { nodes_visited });
    }
    Ok(Lookup {
        candidates: leaf.candidates.clone(),
        nodes_visited,
    })
}

fn leaf_of(frames: &[&ValidityFrame]) -> Node {
    let mut sorted = frames.to_vec();
    sorted.sort_by(|a, b| a.wcet().total_cmp(&b.wcet()).then_with(|| a.id.cmp(&b.id)));
    Node::Leaf(Leaf {
        infeasible: sorted.is_empty(),
        candidates: sorted.into_iter().map(|f| f.id.clone()).collect(),
    })
}

fn admits_cell(domain: &Domain, cell: &Cell) -> bool {
    match (domain, cell) {
        (Domain::Flags(set), Cell::Flag(b)) => set.contains(b),
        (Domain::Interval { lo, hi }, Cell::Point(p)) => lo <= p && p <= hi,
        (Domain::Interval { lo, hi }, Cell::Between(a, b)) => lo <= a && b <= hi,
        _ => false,
    }
}

fn build(frames: &[&ValidityFrame], factors: &[String]) -> Node {
    let Some((factor, rest)) = factors.split_first() else {
        return leaf_of(frames);
    };
    let cells = cells::cells_for(frames.iter().filter_map(|f| f.gamma.get(factor)));
    let parts: Vec<(Cell, Vec<&ValidityFrame>)> = cells
        .into_iter()
        .map(|cell| {
            let subset = frames
                .iter()
                .copied()
                .filter(|f| f.gamma.get(factor).is_none_or(|d| admits_cell(d, &cell)))
                .collect();
            (cell, subset)
        })
        .collect();
    if parts.iter().all(|(_, s)| s.len() == frames.len()) {
        // The factor separates nothing here.
        return build(frames, rest);
    }
    Node::Test {
        factor: factor.clone(),
        branches: parts.into_iter().map(|(c, s)| (c, build(&s, rest))).collect(),
    }
}

/// Compiles `graph` into a decision tree testing factors in `ordering`.
///
/// Only non-invalidated frames covering `requested` enter the tree. Tests
/// that would not separate the remaining frames are skipped, so a factor
/// can be absent from some paths.
pub fn build_tree(graph: &VfGraph, ordering: &[String], requested: &PropertySet) -> Result<DecisionTree, CompileError> {
    for (i, name) in ordering.iter().enumerate() {
        if ordering[..i].contains(name) {
            return Err(CompileError::DuplicateInOrdering(name.clone()));
        }
    }
    if let Some(missing) = graph.factor_names().into_iter().find(|f| !ordering.contains(f)) {
        return Err(CompileError::MissingFromOrdering(missing));
    }
    let frames: Vec<&ValidityFrame> = graph
        .frames()
        .filter(|f| !f.is_invalidated() && frame_covers(f, requested))
        .collect();
    let root = build(&frames, ordering);
    Ok(DecisionTree {
        depth: root.depth(),
        root,
        costs: graph.frames().map(|f| (f.id.clone(), f.wcet())).collect(),
        pairs: graph.approximation_pairs(),
        ordering: ordering.to_vec(),
    })
}

/// Removes every candidate whose worst case, plus the cost of the partner
/// it must be compared against, exceeds `deadline`. The most expensive
/// offender goes first, so an approximation survives its original.
pub fn prune_for_deadline(tree: &DecisionTree, deadline: f64) -> DecisionTree {
    let mut out = tree.clone();
    out.root.for_each_leaf_mut(&mut |leaf| {
        loop {
            let worst = leaf
                .candidates
                .iter()
                .filter(|c| tree.costs[*c] + tree.comparison_overhead(&leaf.candidates, c) > deadline)
                .max_by(|a, b| tree.costs[*a].total_cmp(&tree.costs[*b]).then_with(|| a.cmp(b)))
                .cloned();
            match worst {
                Some(w) => leaf.candidates.retain(|c| *c != w),
                None => break,
            }
        }
        if leaf.candidates.is_empty() {
            leaf.infeasible = true;
        }
    });
    out
}

impl fmt::Display for DecisionTree {
    /// One node per line, two spaces of indent per level; leaves list their
    /// candidates in order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, level: usize, label: Option<&Cell>) -> fmt::Result {
            let indent = "  ".repeat(level);
            let prefix = label.map(|c| format!("[{c}] ")).unwrap_or_default();
            match node {
                Node::Leaf(leaf) if leaf.infeasible => writeln!(f, "{indent}{prefix}leaf infeasible"),
                Node::Leaf(leaf) => {
                    let ids: Vec<&str> = leaf.candidates.iter().map(FrameId::as_str).collect();
                    writeln!(f, "{indent}{prefix}leaf {}", ids.join(" "))
                }
                Node::Test { factor, branches } => {
                    writeln!(f, "{indent}{prefix}test {factor}")?;
                    branches.iter().try_for_each(|(c, n)| write_node(f, n, level + 1, Some(c)))
                }
            }
        }
        write_node(f, &self.root, 0, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{ExecutionSpec, FactorSet, ValidityStatus, Value};
    use crate::reference;
    use crate::vfg::{enumerate_admissible, EdgeKind};

    fn position() -> PropertySet {
        PropertySet::new().with("position", Domain::interval(0.0, 100.0).unwrap())
    }

    fn frame(id: &str, gamma: FactorSet, wcet: f64) -> ValidityFrame {
        ValidityFrame::new(id, id, position(), gamma, ExecutionSpec::new("cpu", wcet, wcet).unwrap())
    }

    fn blink(b: bool) -> Context {
        Context::new().with("blinking", Value::Bool(b))
    }

    fn reference_tree() -> (VfGraph, DecisionTree) {
        let lib = reference::library();
        let g = lib.graph().unwrap();
        let t = build_tree(&g, &["blinking".to_string()], &lib.requested).unwrap();
        (g, t)
    }

    #[test]
    fn reference_tree_has_two_leaves_matching_oracle() {
        let (g, t) = reference_tree();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaf_count(), 2);
        for b in [false, true] {
            let got = lookup(&t, &blink(b)).unwrap();
            assert_eq!(got.nodes_visited, 1);
            assert_eq!(got.candidates, enumerate_admissible(&g, &blink(b), &reference::library().requested).unwrap());
        }
        let got = lookup(&t, &blink(true)).unwrap();
        let ids: Vec<&str> = got.candidates.iter().map(FrameId::as_str).collect();
        assert_eq!(ids, ["VF_b1", "VF_b", "VF_d"]);
    }

    #[test]
    fn dump_format() {
        let (_, t) = reference_tree();
        assert_eq!(
            t.to_string(),
            "test blinking\n  [false] leaf VF_a1 VF_a VF_d\n  [true] leaf VF_b1 VF_b VF_d\n"
        );
    }

    #[test]
    fn unconstrained_graph_compiles_to_single_leaf() {
        let mut g = VfGraph::new(frame("d", FactorSet::new(), 5.0)).unwrap();
        g.add_frame(frame("a", FactorSet::new(), 1.0)).unwrap();
        let t = build_tree(&g, &[], &position()).unwrap();
        assert_eq!(t.depth(), 0);
        let got = lookup(&t, &Context::new()).unwrap();
        assert_eq!(got.nodes_visited, 0);
        assert_eq!(got.candidates, vec![FrameId::from("a"), FrameId::from("d")]);
    }

    #[test]
    fn two_boolean_factors_test_each_once() {
        let mut g = VfGraph::new(frame("d", FactorSet::new(), 9.0)).unwrap();
        let calm = FactorSet::new()
            .with("blinking", Domain::flags([false]))
            .with("braking", Domain::flags([false]));
        g.add_frame(frame("calm", calm, 1.0)).unwrap();
        g.add_frame(frame("brk", FactorSet::new().with("braking", Domain::flags([true])), 2.0)).unwrap();
        let order = vec!["blinking".to_string(), "braking".to_string()];
        let t = build_tree(&g, &order, &position()).unwrap();
        assert!(t.depth() <= 2);
        fn check(node: &Node, seen: &mut Vec<String>) {
            if let Node::Test { factor, branches } = node {
                assert!(!seen.contains(factor));
                seen.push(factor.clone());
                for (_, n) in branches {
                    check(n, &mut seen.clone());
                }
            }
        }
        check(t.root(), &mut Vec::new());
        for b in [false, true] {
            for k in [false, true] {
                let c = blink(b).with("braking", Value::Bool(k));
                assert!(lookup(&t, &c).unwrap().nodes_visited <= t.depth());
                assert_eq!(lookup(&t, &c).unwrap().candidates, enumerate_admissible(&g, &c, &position()).unwrap());
            }
        }
    }

    #[test]
    fn ordering_errors() {
        let (g, _) = reference_tree();
        let req = reference::library().requested;
        assert_eq!(build_tree(&g, &[], &req), Err(CompileError::MissingFromOrdering("blinking".into())));
        let dup = vec!["blinking".to_string(), "blinking".to_string()];
        assert_eq!(build_tree(&g, &dup, &req), Err(CompileError::DuplicateInOrdering("blinking".into())));
    }

    #[test]
    fn lookup_errors() {
        let (_, t) = reference_tree();
        assert_eq!(lookup(&t, &Context::new()), Err(CompileError::MissingFactor("blinking".into())));
        let wrong = Context::new().with("blinking", Value::Real(0.0));
        assert_eq!(lookup(&t, &wrong), Err(CompileError::ValueKind("blinking".into())));
    }

    #[test]
    fn interval_factor_split_at_endpoints() {
        let mut g = VfGraph::new(frame("d", FactorSet::new(), 9.0)).unwrap();
        g.add_frame(frame("near", FactorSet::new().with("gap", Domain::interval(0.0, 30.0).unwrap()), 1.0)).unwrap();
        g.add_frame(frame("far", FactorSet::new().with("gap", Domain::interval(20.0, 100.0).unwrap()), 2.0)).unwrap();
        let t = build_tree(&g, &["gap".to_string()], &position()).unwrap();
        for x in [-5.0, 0.0, 10.0, 20.0, 25.0, 30.0, 50.0, 100.0, 150.0] {
            let c = Context::new().with("gap", Value::Real(x));
            assert_eq!(lookup(&t, &c).unwrap().candidates, enumerate_admissible(&g, &c, &position()).unwrap(), "gap={x}");
        }
    }

    #[test]
    fn pruning_examples() {
        let mut g = VfGraph::new(frame("orig", FactorSet::new(), 10.0)).unwrap();
        g.add_frame(frame("approx", FactorSet::new(), 1.0)).unwrap();
        g.add_edge(&"orig".into(), &"approx".into(), EdgeKind::Approximate).unwrap();
        let t = build_tree(&g, &[], &position()).unwrap();

        assert_eq!(prune_for_deadline(&t, 11.0), t);
        let mid = prune_for_deadline(&t, 5.0);
        assert_eq!(lookup(&mid, &Context::new()).unwrap().candidates, vec![FrameId::from("approx")]);
        let none = prune_for_deadline(&t, 0.5);
        assert_eq!(none.infeasible_leaves(), none.leaf_count());
        assert!(matches!(lookup(&none, &Context::new()), Err(CompileError::NoFeasibleModel { nodes_visited: 0 })));
        // Both fit alone but not together: the original goes.
        let pair = prune_for_deadline(&t, 10.5);
        assert_eq!(lookup(&pair, &Context::new()).unwrap().candidates, vec![FrameId::from("approx")]);
    }

    #[test]
    fn pruning_is_sound_on_reference() {
        let (_, t) = reference_tree();
        for d in [0.5, 1.0, 1.5, 2.0, 3.0, 3.7, 5.0, 8.0, 10.0, 100.0] {
            let p = prune_for_deadline(&t, d);
            for leaf in p.leaves() {
                for c in &leaf.candidates {
                    assert!(p.wcet(c).unwrap() + p.comparison_overhead(&leaf.candidates, c) <= d);
                }
            }
        }
    }

    #[test]
    fn invalidated_frames_never_compiled_in() {
        let lib = reference::library();
        let mut g = lib.graph().unwrap();
        g.frame_mut(&"VF_a1".into()).unwrap().validity.status = ValidityStatus::Invalidated;
        let t = build_tree(&g, &["blinking".to_string()], &lib.requested).unwrap();
        assert!(t.leaves().iter().all(|l| !l.candidates.contains(&FrameId::from("VF_a1"))));
    }
}
