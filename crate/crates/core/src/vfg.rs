//! Validity Frame Graph: the design-time mega-model relating frames by
//! abstraction, approximation and view decomposition.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::frames::{frame_admits, frame_covers, Domain, FrameError, FrameId, PropertySet, Value, ValidityFrame};

/// Observed influencing-factor assignment at one monitoring instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Context {
    assignments: BTreeMap<String, Value>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        self.assignments.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.assignments.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Context {
    type Err = String;

    /// Whitespace-separated `name=value` pairs.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ctx = Context::new();
        for tok in s.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| format!("expected name=value, got `{tok}`"))?;
            if ctx.get(k).is_some() {
                return Err(format!("factor `{k}` assigned twice"));
            }
            ctx.set(k, v.parse()?);
        }
        Ok(ctx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    /// Target reasons on strictly fewer properties.
    Abstract,
    /// Target keeps the property names, with factors a domain-wise subset.
    Approximate,
    /// Target covers only a portion of the properties and/or factors.
    ViewDecomposition,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Abstract => "abstract",
            EdgeKind::Approximate => "approximate",
            EdgeKind::ViewDecomposition => "view",
        })
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abstract" => Ok(EdgeKind::Abstract),
            "approximate" => Ok(EdgeKind::Approximate),
            "view" => Ok(EdgeKind::ViewDecomposition),
            other => Err(format!("unknown edge kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub from: FrameId,
    pub to: FrameId,
    pub kind: EdgeKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("frame `{0}` already present")]
    DuplicateFrame(FrameId),
    #[error("unknown frame `{0}`")]
    UnknownFrame(FrameId),
    #[error("{kind} edge {from} -> {to} is inconsistent: {reason} `{name}`")]
    Consistency {
        from: FrameId,
        to: FrameId,
        kind: EdgeKind,
        reason: &'static str,
        name: String,
    },
    #[error("edge {from} -> {to} would create a cycle")]
    Cycle { from: FrameId, to: FrameId },
    #[error("head frame `{0}` cannot have incoming edges")]
    HeadTarget(FrameId),
    #[error("factor `{0}` is declared both as an interval and as an enumeration")]
    MixedDomain(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfGraph {
    frames: BTreeMap<FrameId, ValidityFrame>,
    edges: Vec<Edge>,
    head: FrameId,
}

impl VfGraph {
    /// A graph always has a head: the most detailed model.
    pub fn new(head: ValidityFrame) -> Result<Self, GraphError> {
        head.check_mappings()?;
        let id = head.id.clone();
        let mut frames = BTreeMap::new();
        frames.insert(id.clone(), head);
        Ok(VfGraph {
            frames,
            edges: Vec::new(),
            head: id,
        })
    }

    pub fn head(&self) -> &ValidityFrame {
        &self.frames[&self.head]
    }

    pub fn head_id(&self) -> &FrameId {
        &self.head
    }

    pub fn frame(&self, id: &FrameId) -> Option<&ValidityFrame> {
        self.frames.get(id)
    }

    pub fn frame_mut(&mut self, id: &FrameId) -> Option<&mut ValidityFrame> {
        self.frames.get_mut(id)
    }

    pub fn frames(&self) -> impl Iterator<Item = &ValidityFrame> {
        self.frames.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Factor names in first-declaration order (head first, then the
    /// remaining frames by id).
    pub fn factor_names(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let order = std::iter::once(self.head()).chain(self.frames.values().filter(|f| f.id != self.head));
        for f in order {
            for name in f.gamma.names() {
                if seen.insert(name.to_string()) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    /// Every domain declared for `factor` across the graph.
    pub fn factor_domains<'a>(&'a self, factor: &'a str) -> impl Iterator<Item = &'a Domain> + 'a {
        self.frames.values().filter_map(move |f| f.gamma.get(factor))
    }

    pub fn add_frame(&mut self, frame: ValidityFrame) -> Result<(), GraphError> {
        if self.frames.contains_key(&frame.id) {
            return Err(GraphError::DuplicateFrame(frame.id));
        }
        frame.check_mappings()?;
        for (name, domain) in frame.gamma.iter() {
            if self.factor_domains(name).any(|d| d.is_interval() != domain.is_interval()) {
                return Err(GraphError::MixedDomain(name.to_string()));
            }
        }
        self.frames.insert(frame.id.clone(), frame);
        Ok(())
    }

    pub fn add_edge(&mut self, from: &FrameId, to: &FrameId, kind: EdgeKind) -> Result<(), GraphError> {
        let src = self.frames.get(from).ok_or_else(|| GraphError::UnknownFrame(from.clone()))?;
        let dst = self.frames.get(to).ok_or_else(|| GraphError::UnknownFrame(to.clone()))?;
        if *to == self.head {
            return Err(GraphError::HeadTarget(to.clone()));
        }
        check_edge(src, dst, kind)?;
        if from == to || self.reaches(to, from) {
            return Err(GraphError::Cycle {
                from: from.clone(),
                to: to.clone(),
            });
        }
        let edge = Edge {
            from: from.clone(),
            to: to.clone(),
            kind,
        };
        if !self.edges.contains(&edge) {
            self.edges.push(edge);
        }
        Ok(())
    }

    fn reaches(&self, start: &FrameId, goal: &FrameId) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            if cur == goal {
                return true;
            }
            if seen.insert(cur) {
                queue.extend(self.edges.iter().filter(|e| &e.from == cur).map(|e| &e.to));
            }
        }
        false
    }

    /// Pairs `(original, approximated)` joined by an approximation edge.
    pub fn approximation_pairs(&self) -> Vec<(FrameId, FrameId)> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Approximate)
            .map(|e| (e.from.clone(), e.to.clone()))
            .collect()
    }

    /// Undirected neighbours, sorted by id.
    pub fn neighbours(&self, id: &FrameId) -> Vec<&FrameId> {
        let mut out: Vec<&FrameId> = self
            .edges
            .iter()
            .filter_map(|e| {
                if &e.from == id {
                    Some(&e.to)
                } else if &e.to == id {
                    Some(&e.from)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Re-checks every structural invariant from scratch.
    pub fn check_consistency(&self) -> Result<(), GraphError> {
        if self.edges.iter().any(|e| e.to == self.head) {
            return Err(GraphError::HeadTarget(self.head.clone()));
        }
        for e in &self.edges {
            check_edge(&self.frames[&e.from], &self.frames[&e.to], e.kind)?;
        }
        // Kahn's algorithm for acyclicity.
        let mut indeg: BTreeMap<&FrameId, usize> = self.frames.keys().map(|k| (k, 0)).collect();
        for e in &self.edges {
            *indeg.get_mut(&e.to).unwrap() += 1;
        }
        let mut ready: Vec<&FrameId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut visited = 0;
        while let Some(n) = ready.pop() {
            visited += 1;
            for e in self.edges.iter().filter(|e| &e.from == n) {
                let d = indeg.get_mut(&e.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(&e.to);
                }
            }
        }
        if visited != self.frames.len() {
            let e = &self.edges[0];
            return Err(GraphError::Cycle {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
        Ok(())
    }
}

fn check_edge(src: &ValidityFrame, dst: &ValidityFrame, kind: EdgeKind) -> Result<(), GraphError> {
    let fail = |reason: &'static str, name: &str| {
        Err(GraphError::Consistency {
            from: src.id.clone(),
            to: dst.id.clone(),
            kind,
            reason,
            name: name.to_string(),
        })
    };
    match kind {
        EdgeKind::Approximate => {
            if let Some(n) = src.pi.names().find(|n| !dst.pi.contains(n)) {
                return fail("approximation drops property", n);
            }
            if let Some(n) = dst.pi.names().find(|n| !src.pi.contains(n)) {
                return fail("approximation adds property", n);
            }
            for (name, domain) in dst.gamma.iter() {
                match src.gamma.get(name) {
                    None => return fail("approximation adds factor", name),
                    Some(d) if !domain.is_subset_of(d) => return fail("approximation widens factor", name),
                    _ => {}
                }
            }
        }
        EdgeKind::Abstract => {
            if let Some(n) = dst.pi.names().find(|n| !src.pi.contains(n)) {
                return fail("abstraction adds property", n);
            }
            if dst.pi.len() >= src.pi.len() {
                let n = src.pi.names().next().unwrap_or("");
                return fail("abstraction removes no property; first property is", n);
            }
        }
        EdgeKind::ViewDecomposition => {
            if let Some(n) = dst.pi.names().find(|n| !src.pi.contains(n)) {
                return fail("view adds property", n);
            }
            if let Some(n) = dst.gamma.names().find(|n| !src.gamma.contains(n)) {
                return fail("view adds factor", n);
            }
            if dst.pi.len() == src.pi.len() && dst.gamma.len() == src.gamma.len() {
                let n = src.pi.names().next().unwrap_or("");
                return fail("view keeps every property and factor; first property is", n);
            }
        }
    }
    Ok(())
}

/// Exhaustive query: every non-invalidated frame admitting `context` and
/// covering `requested`, cheapest worst case first, ties by id.
pub fn enumerate_admissible(graph: &VfGraph, context: &Context, requested: &PropertySet) -> Result<Vec<FrameId>, FrameError> {
    let mut out = Vec::new();
    for f in graph.frames() {
        if !f.is_invalidated() && frame_covers(f, requested) && frame_admits(f, context)? {
            out.push(f);
        }
    }
    out.sort_by(|a, b| a.wcet().total_cmp(&b.wcet()).then_with(|| a.id.cmp(&b.id)));
    Ok(out.into_iter().map(|f| f.id.clone()).collect())
}
