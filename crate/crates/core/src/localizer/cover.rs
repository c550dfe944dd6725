use std::collections::{BTreeMap, BTreeSet};

use super::{EditSurface, LocalizeError};
use crate::codegraph::{CodeGraph, EdgeKind, NodeId, NodeKind};
use crate::planner::HighLevelPlan;

/// Most nodes one target name may resolve to.
pub const MAX_TARGET_CANDIDATES: usize = 8;
pub const DEGREE_WEIGHT: f64 = 0.5;
pub const CHANGE_WEIGHT: f64 = 0.5;

/// Greedy set cover: repeatedly take the set covering the most uncovered
/// elements, ties to the lower `cost` and then the lower index. Elements no
/// set contains stay uncovered.
pub fn greedy_cover(sets: &[BTreeSet<usize>], universe: &BTreeSet<usize>, cost: &[f64]) -> Vec<usize> {
    let mut uncovered = universe.clone();
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let best = (0..sets.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, sets[i].intersection(&uncovered).count()))
            .filter(|(_, gain)| *gain > 0)
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| cost[b.0].total_cmp(&cost[a.0])).then_with(|| b.0.cmp(&a.0)));
        let Some((i, _)) = best else { break };
        for e in &sets[i] {
            uncovered.remove(e);
        }
        chosen.push(i);
    }
    chosen.sort_unstable();
    chosen
}

/// Undirected degree on the calls and script_invokes projection, divided by
/// the largest such degree in the graph.
pub fn normalized_degrees(graph: &CodeGraph) -> BTreeMap<NodeId, f64> {
    let mut nbrs: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for e in graph.edges() {
        if matches!(e.kind, EdgeKind::Calls | EdgeKind::ScriptInvokes) && e.src != e.dst {
            nbrs.entry(e.src).or_default().insert(e.dst);
            nbrs.entry(e.dst).or_default().insert(e.src);
        }
    }
    let max = nbrs.values().map(BTreeSet::len).max().unwrap_or(0);
    graph
        .node_ids()
        .map(|id| {
            let d = nbrs.get(&id).map_or(0, BTreeSet::len);
            (id, if max == 0 { 0.0 } else { d as f64 / max as f64 })
        })
        .collect()
}

/// Per-node blast-radius contribution.
pub fn node_blast(graph: &CodeGraph, change_freq: Option<&BTreeMap<String, u64>>) -> BTreeMap<NodeId, f64> {
    let degree = normalized_degrees(graph);
    let max_freq = change_freq.and_then(|f| f.values().max().copied()).unwrap_or(0);
    graph
        .nodes()
        .map(|n| {
            let freq = match change_freq {
                Some(f) if max_freq > 0 => f.get(&n.path).copied().unwrap_or(0) as f64 / max_freq as f64,
                _ => 0.0,
            };
            (n.id, DEGREE_WEIGHT * degree[&n.id] + CHANGE_WEIGHT * freq)
        })
        .collect()
}

/// Candidate nodes of every intervention, in intervention order.
/// Declarations are dropped when the name also has an implementation.
pub fn target_candidates(plan: &HighLevelPlan, graph: &CodeGraph) -> Result<Vec<Vec<NodeId>>, LocalizeError> {
    plan.interventions
        .iter()
        .map(|iv| {
            let mut found = graph.resolve_exact(&iv.target_api);
            let implemented = |id: &NodeId| graph.node(*id).is_some_and(|n| n.kind != NodeKind::Declaration);
            if found.iter().any(implemented) {
                found.retain(implemented);
            }
            if found.is_empty() {
                Err(LocalizeError::UnknownApi(iv.target_api.clone()))
            } else if found.len() > MAX_TARGET_CANDIDATES {
                Err(LocalizeError::AmbiguousTarget { target: iv.target_api.clone(), candidates: found.len() })
            } else {
                Ok(found)
            }
        })
        .collect()
}

/// Smallest set of nodes (by greedy cover) implementing every intervention
/// target, plus the files defining them.
pub fn localize(
    plan: &HighLevelPlan,
    graph: &CodeGraph,
    change_freq: Option<&BTreeMap<String, u64>>,
) -> Result<EditSurface, LocalizeError> {
    let candidates = target_candidates(plan, graph)?;
    let blast = node_blast(graph, change_freq);
    let nodes: Vec<NodeId> = candidates.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let sets: Vec<BTreeSet<usize>> =
        nodes.iter().map(|n| (0..candidates.len()).filter(|i| candidates[*i].contains(n)).collect()).collect();
    let cost: Vec<f64> = nodes.iter().map(|n| blast[n]).collect();
    let universe: BTreeSet<usize> = (0..candidates.len()).collect();
    let chosen: Vec<NodeId> = greedy_cover(&sets, &universe, &cost).into_iter().map(|i| nodes[i]).collect();

    let mut coverage: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for (i, cands) in candidates.iter().enumerate() {
        coverage.insert(i, chosen.iter().copied().filter(|n| cands.contains(n)).collect());
    }
    let mut covering: BTreeSet<NodeId> = chosen.iter().copied().collect();
    for id in &chosen {
        let path = &graph.node(*id).expect("resolved node").path;
        if let Some(file) = graph.file_node(path) {
            covering.insert(file.id);
        }
    }
    let files = covering.iter().filter_map(|id| graph.node(*id)).map(|n| n.path.clone()).collect();
    let node_scores: BTreeMap<NodeId, f64> = covering.iter().map(|id| (*id, blast[id])).collect();
    Ok(EditSurface { blast_radius: node_scores.values().sum(), covering_nodes: covering, files, coverage, node_scores })
}
