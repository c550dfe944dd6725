//! Bottom-up processing order over the condensed calls projection.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::DocError;
use crate::codegraph::{CodeGraph, EdgeKind, NodeId};

/// Callees before callers; among nodes whose order is not forced, ascending
/// NodeId.
pub fn schedule(graph: &CodeGraph) -> Result<Vec<NodeId>, DocError> {
    if !graph.is_condensed() {
        return Err(DocError::NotCondensed);
    }
    let mut pending: BTreeMap<NodeId, usize> = graph.node_ids().map(|id| (id, 0)).collect();
    let mut callers: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in graph.edges_of_kind(EdgeKind::Calls) {
        if e.src == e.dst {
            continue;
        }
        *pending.get_mut(&e.src).expect("edge endpoint") += 1;
        callers.entry(e.dst).or_default().push(e.src);
    }
    let mut ready: BinaryHeap<Reverse<NodeId>> =
        pending.iter().filter(|(_, n)| **n == 0).map(|(id, _)| Reverse(*id)).collect();
    let mut order = Vec::with_capacity(pending.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id);
        for c in callers.get(&id).into_iter().flatten() {
            let n = pending.get_mut(c).expect("caller");
            *n -= 1;
            if *n == 0 {
                ready.push(Reverse(*c));
            }
        }
    }
    if order.len() != pending.len() {
        return Err(DocError::NotCondensed);
    }
    Ok(order)
}

/// Groups the schedule into levels: a node's level is one more than the
/// highest level among its callees. Nodes in one level are independent.
pub fn levels(graph: &CodeGraph, order: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut level: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    for &id in order {
        let l = graph.callees(id).iter().filter_map(|c| level.get(c)).map(|l| l + 1).max().unwrap_or(0);
        level.insert(id, l);
        if out.len() <= l {
            out.resize(l + 1, Vec::new());
        }
        out[l].push(id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::{condense_sccs, GraphEdge, GraphNode, Language, NodeKind, Span};
    use proptest::prelude::*;

    fn graph(n: usize, calls: &[(usize, usize)]) -> (CodeGraph, Vec<NodeId>) {
        let nodes: Vec<GraphNode> = (0..n)
            .map(|i| {
                GraphNode::new(NodeKind::Definition, Language::Cpp, "a.cc", Span::new(i, i + 1), &format!("f{i}"), None)
            })
            .collect();
        let ids = nodes.iter().map(|n| n.id).collect::<Vec<_>>();
        let edges: Vec<GraphEdge> =
            calls.iter().map(|&(a, b)| GraphEdge::new(ids[a], ids[b], EdgeKind::Calls)).collect();
        let g = CodeGraph::from_parts("fp", nodes, edges, false).unwrap();
        (condense_sccs(&g).unwrap(), ids)
    }

    #[test]
    fn chain_is_reversed() {
        let (g, ids) = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(schedule(&g).unwrap(), [ids[2], ids[1], ids[0]]);
    }

    #[test]
    fn no_calls_sorts_by_id() {
        let (g, mut ids) = graph(4, &[]);
        ids.sort();
        assert_eq!(schedule(&g).unwrap(), ids);
    }

    #[test]
    fn scc_group_before_its_caller() {
        let (g, ids) = graph(3, &[(0, 1), (1, 0), (2, 0)]);
        let order = schedule(&g).unwrap();
        assert_eq!(order.len(), 2);
        assert_eq!(g.node(order[0]).unwrap().kind, NodeKind::SccGroup);
        assert_eq!(order[1], ids[2]);
    }

    #[test]
    fn uncondensed_rejected() {
        let nodes = vec![GraphNode::new(NodeKind::File, Language::Cpp, "a.cc", Span::new(0, 0), "a.cc", None)];
        let g = CodeGraph::from_parts("fp", nodes, vec![], false).unwrap();
        assert!(matches!(schedule(&g), Err(DocError::NotCondensed)));
    }

    #[test]
    fn levels_group_independent_nodes() {
        let (g, ids) = graph(4, &[(0, 1), (0, 2), (3, 0)]);
        let order = schedule(&g).unwrap();
        let lv = levels(&g, &order);
        assert_eq!(lv.len(), 3);
        let mut first = vec![ids[1], ids[2]];
        first.sort();
        assert_eq!(lv[0], first);
        assert_eq!(lv[2], [ids[3]]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn callees_come_first(n in 1usize..120, raw in prop::collection::vec((0usize..1000, 0usize..1000), 0..400)) {
            // Forward edges only, so the graph is a DAG.
            let calls: Vec<(usize, usize)> = raw
                .into_iter()
                .map(|(a, b)| (a % n, b % n))
                .filter(|(a, b)| a < b)
                .collect();
            let (g, _) = graph(n, &calls);
            let order = schedule(&g).unwrap();
            prop_assert_eq!(order.len(), g.node_count());
            let pos: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
            for e in g.edges_of_kind(EdgeKind::Calls) {
                prop_assert!(pos[&e.dst] < pos[&e.src]);
            }
        }
    }
}
