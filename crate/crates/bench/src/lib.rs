//! Fixtures shared by the dispatch benchmarks.

use vframe_core::compiler::{build_tree, enumerate_contexts, DecisionTree};
use vframe_core::synth::{random_library, SynthConfig};
use vframe_core::{reference, Context, PropertySet, VfGraph};

pub struct Fixture {
    pub name: String,
    pub graph: VfGraph,
    pub tree: DecisionTree,
    pub requested: PropertySet,
    pub contexts: Vec<Context>,
}

fn fixture(name: String, lib: vframe_core::Library) -> Fixture {
    let graph = lib.graph().expect("consistent library");
    let tree = build_tree(&graph, &lib.factor_ordering(&graph), &lib.requested).expect("ordering covers factors");
    Fixture {
        name,
        contexts: enumerate_contexts(&graph),
        graph,
        tree,
        requested: lib.requested,
    }
}

pub fn reference_fixture() -> Fixture {
    fixture("reference".into(), reference::library())
}

/// The largest of a few seeded random libraries.
pub fn synthetic_fixture() -> Fixture {
    let lib = (0..20)
        .map(|seed| random_library(seed, SynthConfig::default()))
        .max_by_key(|l| l.frames.len())
        .expect("non-empty range");
    fixture(format!("synthetic-{}", lib.frames.len()), lib)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_contexts() {
        for f in [reference_fixture(), synthetic_fixture()] {
            assert!(!f.contexts.is_empty(), "{}", f.name);
        }
    }
}
