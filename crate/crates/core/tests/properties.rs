use proptest::prelude::*;

use vframe_core::compiler::{
    build_tree, enumerate_contexts, expected_path_length, factor_cells, graph_search_baseline, lookup, order_factors_by_heatmap,
    prune_for_deadline, ContextCell, HeatMap,
};
use vframe_core::models::{predict_approximated, predict_original, VehicleState};
use vframe_core::synth::{random_library, SynthConfig};
use vframe_core::vfg::enumerate_admissible;
use vframe_core::CompileError;

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_matches_oracle_on_random_libraries(seed in any::<u64>()) {
        let lib = random_library(seed, SynthConfig::default());
        let g = lib.graph().unwrap();
        let order = lib.ordering.clone().unwrap();
        let tree = build_tree(&g, &order, &lib.requested).unwrap();
        for ctx in enumerate_contexts(&g) {
            let want = enumerate_admissible(&g, &ctx, &lib.requested).unwrap();
            match lookup(&tree, &ctx) {
                Ok(got) => {
                    prop_assert_eq!(&got.candidates, &want);
                    prop_assert!(got.nodes_visited <= tree.depth());
                }
                Err(CompileError::NoFeasibleModel { .. }) => prop_assert!(want.is_empty()),
                Err(e) => prop_assert!(false, "{}", e),
            }
            let (base, visited) = graph_search_baseline(&g, &ctx, &lib.requested).unwrap();
            prop_assert_eq!(base, want);
            prop_assert_eq!(visited, g.len());
        }
    }

    #[test]
    fn pruned_candidates_fit_the_deadline(seed in any::<u64>(), deadline in 0.1f64..25.0) {
        let lib = random_library(seed, SynthConfig::default());
        let g = lib.graph().unwrap();
        let tree = build_tree(&g, &lib.ordering.clone().unwrap(), &lib.requested).unwrap();
        let pruned = prune_for_deadline(&tree, deadline);
        prop_assert_eq!(pruned.depth(), tree.depth());
        prop_assert_eq!(pruned.leaf_count(), tree.leaf_count());
        for leaf in pruned.leaves() {
            prop_assert_eq!(leaf.infeasible, leaf.candidates.is_empty());
            for c in &leaf.candidates {
                prop_assert!(pruned.wcet(c).unwrap() + pruned.comparison_overhead(&leaf.candidates, c) <= deadline);
            }
        }
    }

    #[test]
    fn approximation_error_is_half_a_t_squared(
        x0 in -1000.0f64..1000.0,
        v in 0.0f64..50.0,
        a in -5.0f64..5.0,
        horizon in 0.1f64..10.0,
    ) {
        let s = VehicleState::new("car", x0, 0, v, a);
        let o = predict_original(&s, horizon, 0.1).unwrap();
        let p = predict_approximated(&s, horizon, 0.1).unwrap();
        prop_assert_eq!(o.samples.len(), p.samples.len());
        for (so, sp) in o.samples.iter().zip(&p.samples) {
            prop_assert!(((so.x - sp.x).abs() - 0.5 * a.abs() * so.t * so.t).abs() <= 1e-9);
            prop_assert_eq!(so.lane, sp.lane);
        }
    }

    #[test]
    fn zero_acceleration_predictions_coincide(x0 in -1e3f64..1e3, v in 0.0f64..50.0) {
        let s = VehicleState::new("car", x0, 1, v, 0.0);
        prop_assert_eq!(predict_original(&s, 8.0, 0.1).unwrap(), predict_approximated(&s, 8.0, 0.1).unwrap());
    }

    #[test]
    fn every_factor_ordering_compiles_equivalently(seed in any::<u64>(), weights in proptest::collection::vec(1u64..50, 1..12)) {
        let lib = random_library(seed, SynthConfig { max_factors: 3, max_frames: 8 });
        let g = lib.graph().unwrap();
        let contexts = enumerate_contexts(&g);
        let default = g.factor_names();
        let cells = factor_cells(&g);
        let mut hm = HeatMap::new();
        for (ctx, w) in contexts.iter().zip(weights.iter().cycle()) {
            let mut cell = ContextCell::new();
            for (f, cs) in &cells {
                let v = ctx.get(f).unwrap();
                let label = cs.iter().find(|c| c.contains(v)).map_or("(-inf,inf)".to_string(), |c| c.to_string());
                cell = cell.with(f.clone(), label);
            }
            hm.add(cell, *w);
        }
        let mut chosen = order_factors_by_heatmap(&hm, &default);
        chosen.sort();
        let mut want = default.clone();
        want.sort();
        prop_assert_eq!(chosen, want);
        for order in permutations(&default) {
            let t = build_tree(&g, &order, &lib.requested).unwrap();
            let epl = expected_path_length(&t, &hm).unwrap();
            prop_assert!(epl <= t.depth() as f64);
            for ctx in &contexts {
                let want = enumerate_admissible(&g, ctx, &lib.requested).unwrap();
                let got = lookup(&t, ctx).map(|l| l.candidates).unwrap_or_default();
                prop_assert_eq!(got, want);
            }
        }
    }
}
