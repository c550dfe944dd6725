//! Re-derivation of changed files against an existing graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use super::build::{derived_edges, extract_file, file_edges, fingerprint, insert_nodes, read_source, PathResolver};
use super::{CodeGraph, EdgeKind, GraphError, Language, NodeId, NodeKind};

/// Reverse hops over calls and script_invokes edges that a change
/// propagates to.
pub const DIRTY_HOPS: usize = 2;

#[derive(Clone, Debug)]
pub struct IncrementalUpdate {
    pub graph: CodeGraph,
    /// Re-derived nodes plus their callers up to [`DIRTY_HOPS`] away.
    pub dirty: BTreeSet<NodeId>,
}

/// Re-parses `changed_files` (repository-relative) and splices the result
/// into an uncondensed graph built from `repo_root`. Deleted files drop
/// out; files that were never indexed are added if they exist.
///
/// Edges among untouched files are carried over unchanged, except that
/// calls and binds edges are recomputed so that name resolution sees the
/// new definitions. `script_invokes` edges leaving a changed file are
/// dropped; run [`link_scripts`](super::link_scripts) again to restore them.
pub fn incremental_update(
    graph: &CodeGraph,
    changed_files: &[String],
    repo_root: &Path,
) -> Result<IncrementalUpdate, GraphError> {
    if graph.condensed {
        return Err(GraphError::AlreadyCondensed);
    }
    if changed_files.is_empty() {
        return Ok(IncrementalUpdate { graph: graph.clone(), dirty: BTreeSet::new() });
    }
    let indexed: BTreeSet<String> = graph.files().into_iter().map(str::to_string).collect();
    let mut changed: BTreeSet<String> = BTreeSet::new();
    let mut present: Vec<(String, Language)> = Vec::new();
    for raw in changed_files {
        let path = raw.trim_start_matches("./").to_string();
        if !changed.insert(path.clone()) {
            continue;
        }
        let exists = repo_root.join(&path).is_file();
        if !exists && !indexed.contains(&path) {
            return Err(GraphError::UnknownFile(path));
        }
        if let (true, Some(lang)) = (exists, Language::from_path(&path)) {
            present.push((path, lang));
        }
    }

    let mut extracts = Vec::new();
    for (path, lang) in &present {
        let src = read_source(repo_root, path, *lang)?;
        if let Some(x) = extract_file(&src)? {
            extracts.push(x);
        }
    }

    let removed: BTreeSet<NodeId> = graph.nodes.values().filter(|n| changed.contains(&n.path)).map(|n| n.id).collect();
    let mut nodes = graph.nodes.clone();
    nodes.retain(|id, _| !removed.contains(id));
    for x in &extracts {
        insert_nodes(&mut nodes, x);
    }

    let known: BTreeSet<String> = nodes.values().filter(|n| n.kind == NodeKind::File).map(|n| n.path.clone()).collect();
    if known.is_empty() {
        return Err(GraphError::EmptyRepository);
    }
    let file_ids: BTreeMap<String, NodeId> =
        nodes.values().filter(|n| n.kind == NodeKind::File).map(|n| (n.path.clone(), n.id)).collect();

    let mut edges: Vec<_> = graph
        .edges
        .iter()
        .filter(|e| !matches!(e.kind, EdgeKind::Calls | EdgeKind::Binds))
        .filter(|e| !removed.contains(&e.src) && nodes.contains_key(&e.dst))
        .cloned()
        .collect();
    let resolver = PathResolver::new(&known, None);
    for x in &extracts {
        edges.extend(file_edges(x, &resolver, &file_ids));
    }
    edges.extend(derived_edges(&nodes, &edges));

    let mut sources = Vec::with_capacity(known.len());
    for path in &known {
        let bytes =
            std::fs::read(repo_root.join(path)).map_err(|source| GraphError::Io { path: path.clone(), source })?;
        sources.push((path.as_str(), bytes));
    }
    let fp = fingerprint(sources.iter().map(|(p, b)| (*p, b.as_slice())));
    let updated = CodeGraph::from_parts_unchecked(fp, nodes, edges, false);

    let rederived: Vec<NodeId> =
        extracts.iter().flat_map(|x| std::iter::once(x.file.id).chain(x.entities.iter().map(|n| n.id))).collect();
    let mut dirty = reverse_reach(&updated, &rederived, DIRTY_HOPS);
    dirty.extend(reverse_reach(graph, &removed.iter().copied().collect::<Vec<_>>(), DIRTY_HOPS));
    dirty.retain(|id| updated.contains_node(*id));
    Ok(IncrementalUpdate { graph: updated, dirty })
}

/// `seeds` plus every node reaching one of them through at most `hops`
/// calls or script_invokes edges.
pub(crate) fn reverse_reach(graph: &CodeGraph, seeds: &[NodeId], hops: usize) -> BTreeSet<NodeId> {
    let mut rev: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in &graph.edges {
        if matches!(e.kind, EdgeKind::Calls | EdgeKind::ScriptInvokes) {
            rev.entry(e.dst).or_default().push(e.src);
        }
    }
    let mut seen: BTreeSet<NodeId> = seeds.iter().copied().collect();
    let mut queue: VecDeque<(NodeId, usize)> = seeds.iter().map(|s| (*s, 0)).collect();
    while let Some((v, d)) = queue.pop_front() {
        if d == hops {
            continue;
        }
        for &u in rev.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(u) {
                queue.push_back((u, d + 1));
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::build_graph;
    use std::fs;

    fn repo() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("util.cc"), "int leaf(int x) { return x + 1; }\n").unwrap();
        fs::write(dir.path().join("mid.cc"), "int leaf(int x);\nint mid(int x) { return leaf(x); }\n").unwrap();
        fs::write(
            dir.path().join("top.cc"),
            "int mid(int x);\nint top() { return mid(1); }\nint other() { return 0; }\n",
        )
        .unwrap();
        dir
    }

    fn def(g: &CodeGraph, name: &str) -> NodeId {
        g.nodes().find(|n| n.kind == NodeKind::Definition && n.qualified_name == name).unwrap().id
    }

    #[test]
    fn no_changes_is_identity() {
        let dir = repo();
        let g = build_graph(dir.path(), None).unwrap();
        let up = incremental_update(&g, &[], dir.path()).unwrap();
        assert_eq!(up.graph, g);
        assert!(up.dirty.is_empty());
    }

    #[test]
    fn edited_leaf_dirties_callers_and_matches_rebuild() {
        let dir = repo();
        let g = build_graph(dir.path(), None).unwrap();
        fs::write(dir.path().join("util.cc"), "int leaf(int x) { return x + 2; }\n").unwrap();
        let up = incremental_update(&g, &["util.cc".into()], dir.path()).unwrap();
        let fresh = build_graph(dir.path(), None).unwrap();
        assert_eq!(up.graph, fresh);
        let leaf = def(&fresh, "leaf");
        let mid = def(&fresh, "mid");
        let top = def(&fresh, "top");
        assert!(up.dirty.contains(&leaf));
        assert!(up.dirty.contains(&mid));
        assert!(up.dirty.contains(&top));
        assert!(!up.dirty.contains(&def(&fresh, "other")));
    }

    #[test]
    fn deleted_file_dirties_former_callers() {
        let dir = repo();
        let g = build_graph(dir.path(), None).unwrap();
        let mid = def(&g, "mid");
        fs::remove_file(dir.path().join("util.cc")).unwrap();
        let up = incremental_update(&g, &["util.cc".into()], dir.path()).unwrap();
        assert!(up.graph.nodes().all(|n| n.path != "util.cc"));
        assert!(up.dirty.contains(&mid));
        assert_eq!(up.graph, build_graph(dir.path(), None).unwrap());
    }

    #[test]
    fn unknown_file_rejected() {
        let dir = repo();
        let g = build_graph(dir.path(), None).unwrap();
        let err = incremental_update(&g, &["nope.cc".into()], dir.path()).unwrap_err();
        assert!(matches!(err, GraphError::UnknownFile(p) if p == "nope.cc"));
    }
}
