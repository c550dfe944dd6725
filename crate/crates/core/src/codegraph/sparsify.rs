//! Per-node, per-kind out-degree capping.

use std::collections::BTreeMap;

use super::{CodeGraph, EdgeKind, GraphEdge, NodeId};

pub const DEFAULT_MAX_OUT_DEGREE: usize = 32;

/// Pass as `max_out_degree` to disable the degree cap.
pub const UNBOUNDED: usize = usize::MAX;

/// Keeps, for every (source node, edge kind), the `max_out_degree` heaviest
/// outgoing edges with weight at least `min_weight`. Ties go to the lower
/// destination id. `contains` edges are always kept.
pub fn sparsify(graph: &CodeGraph, max_out_degree: usize, min_weight: f64) -> CodeGraph {
    let mut groups: BTreeMap<(NodeId, EdgeKind), Vec<&GraphEdge>> = BTreeMap::new();
    let mut kept = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        if e.kind == EdgeKind::Contains {
            kept.push(e.clone());
        } else {
            groups.entry((e.src, e.kind)).or_default().push(e);
        }
    }
    for (_, mut out) in groups {
        out.retain(|e| e.weight >= min_weight);
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.dst.cmp(&b.dst)));
        kept.extend(out.into_iter().take(max_out_degree).cloned());
    }
    CodeGraph::from_parts_unchecked(graph.repo_fingerprint.clone(), graph.nodes.clone(), kept, graph.condensed)
}
