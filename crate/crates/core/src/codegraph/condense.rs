//! Strongly connected component condensation of the calls projection.

use std::collections::BTreeMap;

use super::types::scc_group_name;
use super::{CodeGraph, EdgeKind, GraphEdge, GraphError, GraphNode, NodeId, NodeKind};

/// Tarjan's algorithm over an adjacency list, iterative. Components come out
/// in reverse topological order of the condensation.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge < adj[v].len() {
                let w = adj[v][*edge];
                *edge += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component member on stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Replaces every cyclic component of the calls projection (two or more
/// nodes, or one self-calling node) with an `SccGroup` node that inherits
/// the members' external edges.
pub fn condense_sccs(graph: &CodeGraph) -> Result<CodeGraph, GraphError> {
    if graph.condensed {
        return Err(GraphError::AlreadyCondensed);
    }
    let ids: Vec<NodeId> = graph.nodes.keys().copied().collect();
    let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    let mut self_loop = vec![false; ids.len()];
    for e in graph.edges_of_kind(EdgeKind::Calls) {
        let (s, d) = (pos[&e.src], pos[&e.dst]);
        if s == d {
            self_loop[s] = true;
        } else {
            adj[s].push(d);
        }
    }

    let mut nodes = graph.nodes.clone();
    let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for comp in strongly_connected_components(&adj) {
        if comp.len() < 2 && !self_loop[comp[0]] {
            continue;
        }
        let members: Vec<&GraphNode> = comp.iter().map(|&i| &graph.nodes[&ids[i]]).collect();
        let rep = members[0];
        let mut names: Vec<&str> = members.iter().map(|m| m.qualified_name.as_str()).collect();
        names.sort_unstable();
        let mut group =
            GraphNode::new(NodeKind::SccGroup, rep.language, &rep.path, rep.span, &scc_group_name(&names), None);
        group.members = members.iter().map(|m| m.id).collect();
        for m in &members {
            nodes.remove(&m.id);
            remap.insert(m.id, group.id);
        }
        nodes.insert(group.id, group);
    }

    let map = |id: NodeId| remap.get(&id).copied().unwrap_or(id);
    let edges: Vec<GraphEdge> = graph
        .edges
        .iter()
        .filter_map(|e| {
            let (src, dst) = (map(e.src), map(e.dst));
            let internal = src == dst && remap.contains_key(&e.src);
            (!internal).then(|| GraphEdge::weighted(src, dst, e.kind, e.weight))
        })
        .collect();
    Ok(CodeGraph::from_parts_unchecked(graph.repo_fingerprint.clone(), nodes, edges, true))
}
