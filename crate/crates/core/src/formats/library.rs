//! Model library file.
//!
//! ```text
//! model M_o kind=original blinker_intent=false
//! frame VF_a model=M_o wcet=2 mean_cost=1.5 platform=cpu status=assumed
//! pi VF_a position=[0,100000]
//! gamma VF_a blinking={false}
//! map VF_a property position=x
//! validate VF_a name=forward check=x_non_decreasing expected=true
//! note VF_a free text
//! edge VF_d VF_a abstract
//! head VF_d
//! request position=[0,10000]
//! order blinking
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{content_lines, Args, ParseError};
use crate::frames::{
    Check, Domain, ExecutionSpec, FrameId, ModelId, PropertySet, ValidationCondition, ValidityFrame, ValidityStatus,
};
use crate::models::{ModelKind, ModelSpec};
use crate::vfg::{Edge, EdgeKind, GraphError, VfGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub models: BTreeMap<ModelId, ModelSpec>,
    /// Declaration order.
    pub frames: Vec<ValidityFrame>,
    pub edges: Vec<Edge>,
    pub head: FrameId,
    /// Properties every selected model must answer for.
    pub requested: PropertySet,
    /// Factor ordering for the tree; `None` means declaration order.
    pub ordering: Option<Vec<String>>,
}

impl Library {
    pub fn graph(&self) -> Result<VfGraph, GraphError> {
        let head = self
            .frames
            .iter()
            .find(|f| f.id == self.head)
            .ok_or_else(|| GraphError::UnknownFrame(self.head.clone()))?;
        let mut g = VfGraph::new(head.clone())?;
        for f in self.frames.iter().filter(|f| f.id != self.head) {
            g.add_frame(f.clone())?;
        }
        for e in &self.edges {
            g.add_edge(&e.from, &e.to, e.kind)?;
        }
        Ok(g)
    }

    pub fn frame(&self, id: &FrameId) -> Option<&ValidityFrame> {
        self.frames.iter().find(|f| &f.id == id)
    }

    pub fn model_of(&self, id: &FrameId) -> Option<&ModelSpec> {
        self.frame(id).and_then(|f| self.models.get(&f.binding.model))
    }

    /// The configured ordering, or the graph's factor declaration order.
    pub fn factor_ordering(&self, graph: &VfGraph) -> Vec<String> {
        self.ordering.clone().unwrap_or_else(|| graph.factor_names())
    }
}

fn domains(n: usize, args: &Args, into: &mut PropertySet) -> Result<(), ParseError> {
    for (name, text) in args.pairs() {
        let d: Domain = text.parse().map_err(|e: String| ParseError::new(n, e))?;
        into.insert(*name, d).map_err(|e| ParseError::new(n, e.to_string()))?;
    }
    Ok(())
}

pub fn parse_library(text: &str) -> Result<Library, ParseError> {
    let mut models = BTreeMap::new();
    let mut frames: Vec<(usize, ValidityFrame)> = Vec::new();
    let mut edges: Vec<(usize, Edge)> = Vec::new();
    let mut head: Option<(usize, FrameId)> = None;
    let mut requested = PropertySet::new();
    let mut ordering = None;

    for (n, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        let err = |m: String| ParseError::new(n, m);
        match keyword {
            "model" => {
                let id = toks.next().ok_or_else(|| err("model needs an id".into()))?;
                let args = Args::parse(n, toks)?;
                args.only(&["kind", "blinker_intent"])?;
                let spec = ModelSpec {
                    kind: args.req::<ModelKind>("kind")?,
                    blinker_intent: args.opt("blinker_intent")?.unwrap_or(false),
                };
                if models.insert(ModelId::from(id), spec).is_some() {
                    return Err(err(format!("model `{id}` declared twice")));
                }
            }
            "frame" => {
                let id = toks.next().ok_or_else(|| err("frame needs an id".into()))?;
                let args = Args::parse(n, toks)?;
                args.only(&["model", "wcet", "mean_cost", "platform", "status"])?;
                let model: String = args.req("model")?;
                let platform: String = args.opt("platform")?.unwrap_or_else(|| "cpu".into());
                let exec = ExecutionSpec::new(platform, args.req("wcet")?, args.req("mean_cost")?)
                    .map_err(|e| err(e.to_string()))?;
                if frames.iter().any(|(_, f)| f.id.as_str() == id) {
                    return Err(err(format!("frame `{id}` declared twice")));
                }
                let mut f = ValidityFrame::new(id, &model, PropertySet::new(), PropertySet::new(), exec);
                f.validity.status = args.opt::<ValidityStatus>("status")?.unwrap_or_default();
                frames.push((n, f));
            }
            "pi" | "gamma" | "map" | "validate" | "note" => {
                let id = toks.next().ok_or_else(|| err(format!("{keyword} needs a frame id")))?;
                let frame = frames
                    .iter_mut()
                    .map(|(_, f)| f)
                    .find(|f| f.id.as_str() == id)
                    .ok_or_else(|| err(format!("unknown frame `{id}`")))?;
                match keyword {
                    "pi" => domains(n, &Args::parse(n, toks)?, &mut frame.pi)?,
                    "gamma" => domains(n, &Args::parse(n, toks)?, &mut frame.gamma)?,
                    "map" => {
                        let table = match toks.next() {
                            Some("property") => &mut frame.binding.property_map,
                            Some("factor") => &mut frame.binding.factor_map,
                            _ => return Err(err("map needs `property` or `factor`".into())),
                        };
                        for (k, v) in Args::parse(n, toks)?.pairs() {
                            table.insert(k.to_string(), v.to_string());
                        }
                    }
                    "validate" => {
                        let args = Args::parse(n, toks)?;
                        args.only(&["name", "check", "expected"])?;
                        let check: String = args.req("check")?;
                        frame.validations.push(ValidationCondition {
                            name: args.req("name")?,
                            check: check.parse::<Check>().map_err(err)?,
                            expected: args.opt("expected")?.unwrap_or(true),
                        });
                    }
                    _ => {
                        let rest: Vec<&str> = toks.collect();
                        frame.validity.notes = rest.join(" ");
                    }
                }
            }
            "edge" => {
                let parts: Vec<&str> = toks.collect();
                let [from, to, kind] = parts[..] else {
                    return Err(err("edge needs FROM TO KIND".into()));
                };
                let kind: EdgeKind = kind.parse().map_err(err)?;
                edges.push((n, Edge { from: from.into(), to: to.into(), kind }));
            }
            "head" => {
                let id = toks.next().ok_or_else(|| err("head needs a frame id".into()))?;
                if head.replace((n, FrameId::from(id))).is_some() {
                    return Err(err("head declared twice".into()));
                }
            }
            "request" => domains(n, &Args::parse(n, toks)?, &mut requested)?,
            "order" => ordering = Some(toks.map(str::to_string).collect()),
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let (head_line, head) = head.ok_or_else(|| ParseError::new(last, "no `head` declared"))?;
    for (n, f) in &frames {
        if !models.contains_key(&f.binding.model) {
            return Err(ParseError::new(*n, format!("frame `{}` uses undeclared model `{}`", f.id, f.binding.model)));
        }
        f.check_mappings().map_err(|e| ParseError::new(*n, e.to_string()))?;
    }

    // Build the graph here so that inconsistencies point at their line.
    let head_frame = frames
        .iter()
        .find(|(_, f)| f.id == head)
        .ok_or_else(|| ParseError::new(head_line, format!("head `{head}` is not a declared frame")))?;
    let mut g = VfGraph::new(head_frame.1.clone()).map_err(|e| ParseError::new(head_line, e.to_string()))?;
    for (n, f) in frames.iter().filter(|(_, f)| f.id != head) {
        g.add_frame(f.clone()).map_err(|e| ParseError::new(*n, e.to_string()))?;
    }
    for (n, e) in &edges {
        g.add_edge(&e.from, &e.to, e.kind).map_err(|err| ParseError::new(*n, err.to_string()))?;
    }

    Ok(Library {
        models,
        frames: frames.into_iter().map(|(_, f)| f).collect(),
        edges: edges.into_iter().map(|(_, e)| e).collect(),
        head,
        requested,
        ordering,
    })
}

fn domain_args(set: &PropertySet) -> String {
    set.iter().map(|(n, d)| format!(" {n}={d}")).collect()
}

pub fn write_library(lib: &Library) -> String {
    let mut out = String::new();
    for (id, m) in &lib.models {
        let _ = writeln!(out, "model {id} kind={} blinker_intent={}", m.kind, m.blinker_intent);
    }
    for f in &lib.frames {
        let _ = writeln!(
            out,
            "frame {} model={} wcet={} mean_cost={} platform={} status={}",
            f.id, f.binding.model, f.exec.wcet, f.exec.mean_cost, f.exec.platform, f.validity.status
        );
        if !f.pi.is_empty() {
            let _ = writeln!(out, "pi {}{}", f.id, domain_args(&f.pi));
        }
        if !f.gamma.is_empty() {
            let _ = writeln!(out, "gamma {}{}", f.id, domain_args(&f.gamma));
        }
        for (table, map) in [("property", &f.binding.property_map), ("factor", &f.binding.factor_map)] {
            if !map.is_empty() {
                let pairs: String = map.iter().map(|(k, v)| format!(" {k}={v}")).collect();
                let _ = writeln!(out, "map {} {table}{pairs}", f.id);
            }
        }
        for v in &f.validations {
            let _ = writeln!(out, "validate {} name={} check={} expected={}", f.id, v.name, v.check, v.expected);
        }
        if !f.validity.notes.is_empty() {
            let _ = writeln!(out, "note {} {}", f.id, f.validity.notes);
        }
    }
    for e in &lib.edges {
        let _ = writeln!(out, "edge {} {} {}", e.from, e.to, e.kind);
    }
    let _ = writeln!(out, "head {}", lib.head);
    if !lib.requested.is_empty() {
        let _ = writeln!(out, "request{}", domain_args(&lib.requested));
    }
    if let Some(order) = &lib.ordering {
        let _ = writeln!(out, "order {}", order.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn reference_round_trips() {
        let lib = reference::library();
        let again = parse_library(&write_library(&lib)).unwrap();
        assert_eq!(again, lib);
        assert_eq!(lib.frames.len(), 5);
        assert_eq!(lib.head.as_str(), "VF_d");
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let cases = [
            ("model m kind=original\nframe a model=m wcet=1 mean_cost=2\nhead a\n", 2),
            ("model m kind=bogus\n", 1),
            ("frame a model=m wcet=1 mean_cost=1\nhead a\n", 1),
            ("model m kind=original\nframe a model=m wcet=1 mean_cost=1\npi b x=[0,1]\nhead a\n", 3),
            ("model m kind=original\nframe a model=m wcet=1 mean_cost=1\n", 2),
            ("model m kind=original\nframe a model=m wcet=1 mean_cost=1\ngamma a g={maybe}\nhead a\n", 3),
            ("wat\n", 1),
        ];
        for (text, line) in cases {
            let err = parse_library(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
        }
    }

    #[test]
    fn inconsistent_edge_points_at_its_line() {
        let text = "\
model m kind=original
frame d model=m wcet=5 mean_cost=5
pi d position=[0,10] lane=[0,2]
frame a model=m wcet=1 mean_cost=1
pi a position=[0,10]
# drops a property, so it cannot be an approximation
edge d a approximate
head d
";
        let err = parse_library(text).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.message.contains("lane"), "{err}");
    }

    #[test]
    fn comments_and_defaults() {
        let text = "# lib\nmodel m kind=detailed # trailing\nframe d model=m wcet=3 mean_cost=1\nhead d\n";
        let lib = parse_library(text).unwrap();
        assert!(!lib.models[&ModelId::from("m")].blinker_intent);
        assert_eq!(lib.frames[0].exec.platform, "cpu");
        assert_eq!(lib.ordering, None);
        assert_eq!(lib.graph().unwrap().len(), 1);
    }
}
