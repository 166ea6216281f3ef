//! Seeded generator of random consistent model libraries.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formats::Library;
use crate::frames::{Domain, ExecutionSpec, FactorSet, FrameId, ModelId, PropertySet, ValidityFrame};
use crate::models::{ModelKind, ModelSpec};
use crate::vfg::{EdgeKind, VfGraph};

const GRID: [f64; 5] = [0.0, 10.0, 20.0, 30.0, 40.0];
const PROPERTIES: [&str; 3] = ["position", "lane", "speed"];

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub max_factors: usize,
    pub max_frames: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_factors: 4,
            max_frames: 12,
        }
    }
}

fn property_domain(name: &str) -> Domain {
    match name {
        "lane" => Domain::interval(0.0, 2.0),
        _ => Domain::interval(0.0, 1000.0),
    }
    .expect("non-empty")
}

fn random_factor_domain(rng: &mut ChaCha8Rng, boolean: bool) -> Domain {
    if boolean {
        match rng.gen_range(0..3) {
            0 => Domain::flags([false]),
            1 => Domain::flags([true]),
            _ => Domain::flags([false, true]),
        }
    } else {
        let i = rng.gen_range(0..GRID.len());
        let j = rng.gen_range(i..GRID.len());
        Domain::interval(GRID[i], GRID[j]).expect("ordered")
    }
}

fn narrow(rng: &mut ChaCha8Rng, d: &Domain) -> Domain {
    match d {
        Domain::Flags(set) => {
            let items: Vec<bool> = set.iter().copied().collect();
            if items.len() > 1 && rng.gen_bool(0.5) {
                Domain::flags([*items.choose(rng).expect("non-empty")])
            } else {
                d.clone()
            }
        }
        Domain::Interval { lo, hi } => {
            let inside: Vec<f64> = GRID.iter().copied().filter(|g| lo <= g && g <= hi).collect();
            if inside.is_empty() {
                return d.clone();
            }
            let i = rng.gen_range(0..inside.len());
            let j = rng.gen_range(i..inside.len());
            Domain::interval(inside[i], inside[j]).expect("ordered")
        }
    }
}

fn exec(rng: &mut ChaCha8Rng) -> ExecutionSpec {
    let wcet = rng.gen_range(5..100) as f64 / 10.0;
    ExecutionSpec::new("cpu", wcet, wcet / 2.0).expect("positive")
}

/// A consistent library with at most `max_factors` factors and
/// `max_frames` frames, deterministic in `seed`.
pub fn random_library(seed: u64, config: SynthConfig) -> Library {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_factors = rng.gen_range(1..=config.max_factors.max(1));
    let factors: Vec<(String, bool)> = (0..n_factors).map(|i| (format!("f{i}"), rng.gen_bool(0.5))).collect();
    let n_frames = rng.gen_range(1..=config.max_frames.max(1));

    let models: BTreeMap<ModelId, ModelSpec> = [
        ("M_o", ModelKind::Original),
        ("M_a", ModelKind::Approximated),
        ("M_d", ModelKind::Detailed),
    ]
    .into_iter()
    .map(|(id, kind)| (ModelId::from(id), ModelSpec { kind, blinker_intent: false }))
    .collect();

    let mut head_pi = PropertySet::new();
    for p in PROPERTIES {
        head_pi.insert(p, property_domain(p)).expect("distinct");
    }
    let mut head_gamma = FactorSet::new();
    for (f, boolean) in &factors {
        if rng.gen_bool(0.3) {
            head_gamma.insert(f.clone(), random_factor_domain(&mut rng, *boolean)).expect("distinct");
        }
    }
    let head = ValidityFrame::new("VF_0", "M_d", head_pi, head_gamma, exec(&mut rng));
    let mut graph = VfGraph::new(head).expect("valid head");

    for i in 1..n_frames {
        let id = format!("VF_{i}");
        let existing: Vec<FrameId> = graph.frames().map(|f| f.id.clone()).collect();
        let parent = existing.choose(&mut rng).expect("head exists").clone();
        if rng.gen_bool(0.4) {
            // Approximation of an existing frame: same properties, narrower factors.
            let src = graph.frame(&parent).expect("listed").clone();
            let mut gamma = FactorSet::new();
            for (name, d) in src.gamma.iter() {
                gamma.insert(name, narrow(&mut rng, d)).expect("distinct");
            }
            let f = ValidityFrame::new(&id, "M_a", src.pi.clone(), gamma, exec(&mut rng));
            graph.add_frame(f).expect("fresh id, same domain kinds");
            let _ = graph.add_edge(&parent, &FrameId::from(id.as_str()), EdgeKind::Approximate);
            continue;
        }
        let mut pi = PropertySet::new();
        for p in PROPERTIES {
            if rng.gen_bool(0.6) {
                pi.insert(p, property_domain(p)).expect("distinct");
            }
        }
        if pi.is_empty() {
            pi.insert("position", property_domain("position")).expect("empty set");
        }
        let mut gamma = FactorSet::new();
        for (f, boolean) in &factors {
            if rng.gen_bool(0.5) {
                gamma.insert(f.clone(), random_factor_domain(&mut rng, *boolean)).expect("distinct");
            }
        }
        graph
            .add_frame(ValidityFrame::new(&id, "M_o", pi, gamma, exec(&mut rng)))
            .expect("fresh id, same domain kinds");
    }

    let ids: Vec<FrameId> = graph.frames().map(|f| f.id.clone()).collect();
    for _ in 0..2 * ids.len() {
        let from = ids.choose(&mut rng).expect("non-empty");
        let to = ids.choose(&mut rng).expect("non-empty");
        let kind = *[EdgeKind::Abstract, EdgeKind::Approximate, EdgeKind::ViewDecomposition]
            .choose(&mut rng)
            .expect("non-empty");
        // Rejected attempts leave the graph unchanged.
        let _ = graph.add_edge(from, to, kind);
    }

    let mut ordering = graph.factor_names();
    ordering.shuffle(&mut rng);
    let head_id = graph.head_id().clone();
    let mut frames: Vec<ValidityFrame> = graph.frames().cloned().collect();
    frames.sort_by_key(|f| f.id != head_id);
    Library {
        models,
        frames,
        edges: graph.edges().to_vec(),
        head: head_id,
        requested: PropertySet::new().with("position", Domain::interval(0.0, 100.0).expect("ordered")),
        ordering: Some(ordering),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{parse_library, write_library};

    #[test]
    fn deterministic_and_consistent() {
        for seed in 0..30 {
            let lib = random_library(seed, SynthConfig::default());
            assert_eq!(lib, random_library(seed, SynthConfig::default()));
            let g = lib.graph().unwrap();
            g.check_consistency().unwrap();
            assert!(g.len() <= 12);
            assert!(g.factor_names().len() <= 4);
            assert_eq!(parse_library(&write_library(&lib)).unwrap(), lib);
        }
    }
}
