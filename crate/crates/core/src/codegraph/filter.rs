//! Path-based node exclusion.

use globset::{Glob, GlobBuilder, GlobMatcher};

use super::{CodeGraph, GraphError};

/// Nodes removed by each pattern, in the order the patterns were given. A
/// node matched by several patterns counts toward the first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub removed_per_pattern: Vec<(String, usize)>,
    pub removed_edges: usize,
}

impl FilterReport {
    pub fn removed_nodes(&self) -> usize {
        self.removed_per_pattern.iter().map(|(_, n)| n).sum()
    }
}

fn compile(pattern: &str) -> Result<GlobMatcher, GraphError> {
    let glob: Glob = GlobBuilder::new(pattern)
        .literal_separator(true)
        .build()
        .map_err(|e| GraphError::InvalidGlob { pattern: pattern.to_string(), reason: e.kind().to_string() })?;
    Ok(glob.compile_matcher())
}

/// Removes every node whose path matches one of `exclusion_globs`, along
/// with its incident edges.
pub fn filter_nodes(graph: &CodeGraph, exclusion_globs: &[String]) -> Result<(CodeGraph, FilterReport), GraphError> {
    let matchers: Vec<GlobMatcher> = exclusion_globs.iter().map(|p| compile(p)).collect::<Result<_, _>>()?;
    let mut counts = vec![0usize; matchers.len()];
    let mut nodes = graph.nodes.clone();
    nodes.retain(|_, n| match matchers.iter().position(|m| m.is_match(&n.path)) {
        Some(i) => {
            counts[i] += 1;
            false
        }
        None => true,
    });
    let edges: Vec<_> =
        graph.edges.iter().filter(|e| nodes.contains_key(&e.src) && nodes.contains_key(&e.dst)).cloned().collect();
    let report = FilterReport {
        removed_per_pattern: exclusion_globs.iter().cloned().zip(counts).collect(),
        removed_edges: graph.edges.len() - edges.len(),
    };
    let out = CodeGraph::from_parts_unchecked(graph.repo_fingerprint.clone(), nodes, edges, graph.condensed);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::{EdgeKind, GraphEdge, GraphNode, Language, NodeKind, Span};

    fn sample() -> CodeGraph {
        let mk = |path: &str, kind, name: &str| GraphNode::new(kind, Language::Cpp, path, Span::new(0, 1), name, None);
        let main = mk("src/main.cc", NodeKind::File, "src/main.cc");
        let run = mk("src/main.cc", NodeKind::Definition, "run");
        let vend = mk("third_party/z/z.cc", NodeKind::File, "third_party/z/z.cc");
        let zf = mk("third_party/z/z.cc", NodeKind::Definition, "zlib_inflate");
        let t = mk("src/test/t.cc", NodeKind::File, "src/test/t.cc");
        let edges = vec![
            GraphEdge::new(main.id, run.id, EdgeKind::Contains),
            GraphEdge::new(vend.id, zf.id, EdgeKind::Contains),
            GraphEdge::new(run.id, zf.id, EdgeKind::Calls),
        ];
        CodeGraph::from_parts("fp", [main, run, vend, zf, t], edges, false).unwrap()
    }

    #[test]
    fn vendored_and_test_paths_removed() {
        let g = sample();
        let pats = vec!["third_party/**".to_string(), "**/test/**".to_string()];
        let (f, report) = filter_nodes(&g, &pats).unwrap();
        assert_eq!(f.node_count(), 2);
        assert_eq!(f.edge_count(), 1);
        assert_eq!(report.removed_per_pattern, vec![(pats[0].clone(), 2), (pats[1].clone(), 1)]);
        assert_eq!(report.removed_edges, 2);
        f.check().unwrap();
    }

    #[test]
    fn empty_and_unmatched_patterns_are_identity() {
        let g = sample();
        assert_eq!(filter_nodes(&g, &[]).unwrap().0, g);
        let (f, r) = filter_nodes(&g, &["docs/**".to_string()]).unwrap();
        assert_eq!(f, g);
        assert_eq!(r.removed_nodes(), 0);
    }

    #[test]
    fn bad_glob_rejected() {
        let err = filter_nodes(&sample(), &["src/[".to_string()]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidGlob { .. }));
    }
}
