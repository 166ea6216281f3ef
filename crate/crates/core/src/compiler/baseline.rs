use std::collections::{BTreeSet, VecDeque};

use crate::frames::{frame_admits, frame_covers, FrameError, FrameId, PropertySet};
use crate::vfg::{Context, VfGraph};

/// Breadth-first search over the graph, edges taken in both directions,
/// checking every frame it reaches. Returns the admissible frames cheapest
/// first and the number of vertices visited.
pub fn graph_search_baseline(
    graph: &VfGraph,
    context: &Context,
    requested: &PropertySet,
) -> Result<(Vec<FrameId>, usize), FrameError> {
    let mut seen: BTreeSet<&FrameId> = BTreeSet::new();
    let mut found = Vec::new();
    let roots = std::iter::once(graph.head_id()).chain(graph.frames().map(|f| &f.id));
    for root in roots {
        if !seen.insert(root) {
            continue;
        }
        let mut queue = VecDeque::from([root]);
        while let Some(id) = queue.pop_front() {
            let frame = graph.frame(id).expect("edges reference known frames");
            if !frame.is_invalidated() && frame_covers(frame, requested) && frame_admits(frame, context)? {
                found.push(frame);
            }
            for n in graph.neighbours(id) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    found.sort_by(|a, b| a.wcet().total_cmp(&b.wcet()).then_with(|| a.id.cmp(&b.id)));
    Ok((found.into_iter().map(|f| f.id.clone()).collect(), seen.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Value;
    use crate::reference;
    use crate::vfg::enumerate_admissible;

    #[test]
    fn visits_every_vertex_and_agrees_with_oracle() {
        let lib = reference::library();
        let g = lib.graph().unwrap();
        for b in [false, true] {
            let ctx = Context::new().with("blinking", Value::Bool(b));
            let (ids, visited) = graph_search_baseline(&g, &ctx, &lib.requested).unwrap();
            assert_eq!(visited, g.len());
            assert_eq!(ids, enumerate_admissible(&g, &ctx, &lib.requested).unwrap());
        }
    }
}
