//! Canonical `graph.json` encoding.

use serde::{Deserialize, Serialize};

use super::{CodeGraph, GraphEdge, GraphError, GraphNode};
use crate::hash::json_error_offset;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct GraphFileRef<'a> {
    version: u32,
    repo_fingerprint: &'a str,
    condensed: bool,
    nodes: Vec<&'a GraphNode>,
    edges: &'a [GraphEdge],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    version: u32,
    repo_fingerprint: String,
    condensed: bool,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
}

/// Pretty-printed JSON with nodes in id order, edges in `(src, dst, kind)`
/// order and a trailing newline.
pub fn serialize(graph: &CodeGraph) -> Vec<u8> {
    let file = GraphFileRef {
        version: FORMAT_VERSION,
        repo_fingerprint: &graph.repo_fingerprint,
        condensed: graph.condensed,
        nodes: graph.nodes.values().collect(),
        edges: &graph.edges,
    };
    crate::hash::canonical_json(&file)
}

pub fn deserialize(bytes: &[u8]) -> Result<CodeGraph, GraphError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| GraphError::MalformedGraphFile { offset: e.valid_up_to(), reason: "not valid UTF-8".into() })?;
    let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::MalformedGraphFile {
        offset: json_error_offset(text.as_bytes(), &e),
        reason: e.to_string(),
    })?;
    if file.version != FORMAT_VERSION {
        return Err(GraphError::MalformedGraphFile {
            offset: 0,
            reason: format!("unsupported version {}", file.version),
        });
    }
    CodeGraph::from_parts(file.repo_fingerprint, file.nodes, file.edges, file.condensed)
        .map_err(|e| GraphError::MalformedGraphFile { offset: bytes.len(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::{EdgeKind, Language, NodeKind, Span};

    fn sample() -> CodeGraph {
        let f = GraphNode::new(NodeKind::File, Language::Cpp, "a.cc", Span::new(0, 30), "a.cc", None);
        let d = GraphNode::new(
            NodeKind::Definition,
            Language::Cpp,
            "a.cc",
            Span::new(0, 30),
            "ns::f",
            Some("int ns::f(int k)".into()),
        );
        let edges = vec![GraphEdge::new(f.id, d.id, EdgeKind::Contains)];
        CodeGraph::from_parts("00ff", [f, d], edges, false).unwrap()
    }

    #[test]
    fn round_trip_and_canonical() {
        let g = sample();
        let a = serialize(&g);
        assert_eq!(a, serialize(&g));
        assert_eq!(deserialize(&a).unwrap(), g);
        let text = String::from_utf8(a).unwrap();
        assert!(text.ends_with("}\n"));
        assert!(!text.contains('\r'));
        let keys = [
            "\"id\"",
            "\"kind\"",
            "\"language\"",
            "\"path\"",
            "\"span\"",
            "\"qualified_name\"",
            "\"signature\"",
            "\"members\"",
        ];
        let first_node = &text[text.find("\"nodes\"").unwrap()..];
        let positions: Vec<usize> = keys.iter().map(|k| first_node.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(text.starts_with("{\n  \"version\": 1,\n  \"repo_fingerprint\""));
    }

    #[test]
    fn truncated_file_reports_offset() {
        let bytes = serialize(&sample());
        let cut = &bytes[..bytes.len() / 2];
        match deserialize(cut) {
            Err(GraphError::MalformedGraphFile { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected MalformedGraphFile, got {other:?}"),
        }
    }

    #[test]
    fn dangling_edge_rejected() {
        let text = String::from_utf8(serialize(&sample())).unwrap();
        let g = sample();
        let file_id = g.nodes().find(|n| n.kind == NodeKind::File).unwrap().id.to_hex();
        let broken =
            text.replacen(&format!("\"id\": \"{file_id}\""), "\"id\": \"00000000000000000000000000000001\"", 1);
        assert!(matches!(deserialize(broken.as_bytes()), Err(GraphError::MalformedGraphFile { .. })));
    }
}
