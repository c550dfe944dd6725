use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hash::FieldHasher;

use super::GraphError;

/// Stable 128-bit identity of a graph node.
///
/// Derived from `(path, kind, qualified name, span start)` so identical
/// repository bytes give identical ids on every host.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u128);

impl NodeId {
    pub fn derive(path: &str, kind: NodeKind, qualified_name: &str, span_start: usize) -> Self {
        let h = FieldHasher::new()
            .field(path)
            .field(kind.as_str())
            .field(qualified_name)
            .field((span_start as u64).to_le_bytes())
            .finish128();
        NodeId(h)
    }

    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 {
            return Err(format!("node id must be 32 hex digits, got {:?}", s));
        }
        u128::from_str_radix(s, 16).map(NodeId).map_err(|e| format!("invalid node id {:?}: {}", s, e))
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    File,
    Declaration,
    Definition,
    Callsite,
    SccGroup,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::File => "File",
            NodeKind::Declaration => "Declaration",
            NodeKind::Definition => "Definition",
            NodeKind::Callsite => "Callsite",
            NodeKind::SccGroup => "SccGroup",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    C,
    Cpp,
    Tcl,
    Python,
    Verilog,
    Other,
}

impl Language {
    /// Language accepted for a repository path, by extension.
    pub fn from_path(path: &str) -> Option<Language> {
        let ext = path.rsplit_once('.')?.1.to_ascii_lowercase();
        Some(match ext.as_str() {
            "c" => Language::C,
            "h" | "hh" | "hpp" | "hxx" | "cc" | "cpp" | "cxx" | "ipp" => Language::Cpp,
            "tcl" => Language::Tcl,
            "py" => Language::Python,
            "v" | "sv" | "vh" | "svh" => Language::Verilog,
            _ => return None,
        })
    }

    /// Languages whose calls resolve against each other.
    pub(crate) fn family(self) -> u8 {
        match self {
            Language::C | Language::Cpp => 0,
            Language::Tcl => 1,
            Language::Python => 2,
            Language::Verilog => 3,
            Language::Other => 4,
        }
    }

    pub fn is_script(self) -> bool {
        matches!(self, Language::Tcl | Language::Python)
    }

    pub fn is_native(self) -> bool {
        matches!(self, Language::C | Language::Cpp)
    }
}

/// Half-open byte range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        if start > end {
            return Err(serde::de::Error::custom(format!("span start {} exceeds end {}", start, end)));
        }
        Ok(Span { start, end })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub language: Language,
    pub path: String,
    pub span: Span,
    pub qualified_name: String,
    pub signature: Option<String>,
    #[serde(default)]
    pub members: Vec<NodeId>,
}

impl GraphNode {
    pub fn new(
        kind: NodeKind,
        language: Language,
        path: &str,
        span: Span,
        qualified_name: &str,
        signature: Option<String>,
    ) -> Self {
        GraphNode {
            id: NodeId::derive(path, kind, qualified_name, span.start),
            kind,
            language,
            path: path.to_string(),
            span,
            qualified_name: qualified_name.to_string(),
            signature,
            members: Vec::new(),
        }
    }

    /// Last component of the qualified name (`a::b::c` and `a.b.c` give `c`).
    pub fn short_name(&self) -> &str {
        short_name(&self.qualified_name)
    }

    /// Qualified names this node answers to: its own, plus the members of an
    /// SCC group.
    pub fn answers_to(&self) -> Vec<&str> {
        if self.kind == NodeKind::SccGroup {
            scc_member_names(&self.qualified_name)
        } else {
            vec![self.qualified_name.as_str()]
        }
    }
}

pub fn short_name(name: &str) -> &str {
    let name = name.rsplit("::").next().unwrap_or(name);
    name.rsplit('.').next().unwrap_or(name)
}

/// Qualified name of a condensed group: `scc(a,b,c)` over sorted member names.
pub(crate) fn scc_group_name(member_names: &[&str]) -> String {
    format!("scc({})", member_names.join(","))
}

pub(crate) fn scc_member_names(name: &str) -> Vec<&str> {
    name.strip_prefix("scc(")
        .and_then(|s| s.strip_suffix(')'))
        .map(|inner| inner.split(',').filter(|s| !s.is_empty()).collect())
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Calls,
    Includes,
    Imports,
    Binds,
    Contains,
    ScriptInvokes,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 6] = [
        EdgeKind::Calls,
        EdgeKind::Includes,
        EdgeKind::Imports,
        EdgeKind::Binds,
        EdgeKind::Contains,
        EdgeKind::ScriptInvokes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Calls => "calls",
            EdgeKind::Includes => "includes",
            EdgeKind::Imports => "imports",
            EdgeKind::Binds => "binds",
            EdgeKind::Contains => "contains",
            EdgeKind::ScriptInvokes => "script_invokes",
        }
    }

    pub fn parse(s: &str) -> Option<EdgeKind> {
        EdgeKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    pub weight: f64,
}

impl GraphEdge {
    pub fn new(src: NodeId, dst: NodeId, kind: EdgeKind) -> Self {
        GraphEdge { src, dst, kind, weight: 1.0 }
    }

    pub fn weighted(src: NodeId, dst: NodeId, kind: EdgeKind, weight: f64) -> Self {
        GraphEdge { src, dst, kind, weight }
    }

    fn sort_key(&self) -> (NodeId, NodeId, EdgeKind) {
        (self.src, self.dst, self.kind)
    }
}

/// Typed property graph over one repository snapshot.
///
/// Nodes are kept keyed by id and edges sorted by `(src, dst, kind)`, so two
/// graphs with the same content compare and serialize identically. Every
/// transformation returns a new graph.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeGraph {
    pub(crate) repo_fingerprint: String,
    pub(crate) nodes: BTreeMap<NodeId, GraphNode>,
    pub(crate) edges: Vec<GraphEdge>,
    pub(crate) condensed: bool,
}

impl CodeGraph {
    /// Assembles a graph from parts, checking endpoint closure and the
    /// script-edge language rule.
    pub fn from_parts(
        repo_fingerprint: impl Into<String>,
        nodes: impl IntoIterator<Item = GraphNode>,
        edges: impl IntoIterator<Item = GraphEdge>,
        condensed: bool,
    ) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            if map.contains_key(&node.id) {
                return Err(GraphError::DuplicateNode(node.id));
            }
            map.insert(node.id, node);
        }
        let graph = CodeGraph {
            repo_fingerprint: repo_fingerprint.into(),
            nodes: map,
            edges: normalize_edges(edges.into_iter().collect()),
            condensed,
        };
        graph.check()?;
        Ok(graph)
    }

    pub(crate) fn from_parts_unchecked(
        repo_fingerprint: String,
        nodes: BTreeMap<NodeId, GraphNode>,
        edges: Vec<GraphEdge>,
        condensed: bool,
    ) -> Self {
        CodeGraph { repo_fingerprint, nodes, edges: normalize_edges(edges), condensed }
    }

    pub fn check(&self) -> Result<(), GraphError> {
        for edge in &self.edges {
            let (Some(src), Some(dst)) = (self.nodes.get(&edge.src), self.nodes.get(&edge.dst)) else {
                return Err(GraphError::DanglingEdge { src: edge.src, dst: edge.dst, kind: edge.kind });
            };
            if edge.kind == EdgeKind::ScriptInvokes && !(src.language.is_script() && dst.language.is_native()) {
                return Err(GraphError::InvalidScriptEdge { src: edge.src, dst: edge.dst });
            }
            if edge.weight.is_nan() || edge.weight < 0.0 {
                return Err(GraphError::NegativeWeight(edge.weight));
            }
        }
        for node in self.nodes.values() {
            if node.kind == NodeKind::SccGroup && node.members.is_empty() {
                return Err(GraphError::EmptyGroup(node.id));
            }
        }
        Ok(())
    }

    pub fn repo_fingerprint(&self) -> &str {
        &self.repo_fingerprint
    }

    pub fn is_condensed(&self) -> bool {
        self.condensed
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.nodes.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges sorted by `(src, dst, kind)`.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &GraphEdge> {
        let start = self.edges.partition_point(|e| e.src < id);
        self.edges[start..].iter().take_while(move |e| e.src == id)
    }

    /// Direct callees of `id` in ascending id order.
    pub fn callees(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> =
            self.outgoing(id).filter(|e| e.kind == EdgeKind::Calls && e.dst != id).map(|e| e.dst).collect();
        out.dedup();
        out
    }

    pub fn file_node(&self, path: &str) -> Option<&GraphNode> {
        self.nodes.values().find(|n| n.kind == NodeKind::File && n.path == path)
    }

    /// Every node answering to `name`, matched exactly on qualified names and
    /// SCC member names. File and Callsite nodes never match.
    pub fn resolve_exact(&self, name: &str) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| !matches!(n.kind, NodeKind::File | NodeKind::Callsite))
            .filter(|n| n.answers_to().contains(&name))
            .map(|n| n.id)
            .collect()
    }

    /// Like [`resolve_exact`](Self::resolve_exact), falling back to matching
    /// on the last name component when nothing matches exactly.
    pub fn resolve_name(&self, name: &str) -> Vec<NodeId> {
        let exact = self.resolve_exact(name);
        if !exact.is_empty() {
            return exact;
        }
        let short = short_name(name);
        if short != name {
            return Vec::new();
        }
        self.nodes
            .values()
            .filter(|n| !matches!(n.kind, NodeKind::File | NodeKind::Callsite))
            .filter(|n| n.answers_to().iter().any(|q| short_name(q) == short))
            .map(|n| n.id)
            .collect()
    }

    /// Set of distinct file paths carrying a File node.
    pub fn files(&self) -> BTreeSet<&str> {
        self.nodes.values().filter(|n| n.kind == NodeKind::File).map(|n| n.path.as_str()).collect()
    }

    /// Depth-first search for a cycle in the calls projection.
    pub fn calls_projection_is_acyclic(&self) -> bool {
        let index: BTreeMap<NodeId, usize> = self.nodes.keys().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adj = vec![Vec::new(); index.len()];
        for e in self.edges_of_kind(EdgeKind::Calls) {
            adj[index[&e.src]].push(index[&e.dst]);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; adj.len()];
        for root in 0..adj.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < adj[v].len() {
                    let w = adj[v][*next];
                    *next += 1;
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return false,
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        true
    }
}

/// Sorts edges into canonical order and merges exact `(src, dst, kind)`
/// duplicates by summing weights.
pub(crate) fn normalize_edges(mut edges: Vec<GraphEdge>) -> Vec<GraphEdge> {
    edges.sort_by_key(|e| e.sort_key());
    let mut out: Vec<GraphEdge> = Vec::with_capacity(edges.len());
    for e in edges {
        match out.last_mut() {
            Some(last) if last.sort_key() == e.sort_key() => last.weight += e.weight,
            _ => out.push(e),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn def(name: &str, start: usize) -> GraphNode {
        GraphNode::new(NodeKind::Definition, Language::Cpp, "a.cc", Span::new(start, start + 1), name, None)
    }

    #[test]
    fn node_id_hex_round_trip() {
        let id = NodeId::derive("a.cc", NodeKind::Definition, "f", 3);
        assert_eq!(id.to_hex().parse::<NodeId>().unwrap(), id);
        assert!("xyz".parse::<NodeId>().is_err());
    }

    #[test]
    fn node_id_depends_on_every_field() {
        let base = NodeId::derive("a.cc", NodeKind::Definition, "f", 3);
        assert_ne!(base, NodeId::derive("b.cc", NodeKind::Definition, "f", 3));
        assert_ne!(base, NodeId::derive("a.cc", NodeKind::Declaration, "f", 3));
        assert_ne!(base, NodeId::derive("a.cc", NodeKind::Definition, "g", 3));
        assert_ne!(base, NodeId::derive("a.cc", NodeKind::Definition, "f", 4));
    }

    #[test]
    fn dangling_edge_rejected() {
        let a = def("a", 0);
        let ghost = NodeId(7);
        let err = CodeGraph::from_parts("fp", [a.clone()], [GraphEdge::new(a.id, ghost, EdgeKind::Calls)], false)
            .unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge { .. }));
    }

    #[test]
    fn duplicate_edges_merge_weights() {
        let a = def("a", 0);
        let b = def("b", 2);
        let g = CodeGraph::from_parts(
            "fp",
            [a.clone(), b.clone()],
            [GraphEdge::new(a.id, b.id, EdgeKind::Calls), GraphEdge::new(a.id, b.id, EdgeKind::Calls)],
            false,
        )
        .unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].weight, 2.0);
    }

    #[test]
    fn scc_names_round_trip() {
        let name = scc_group_name(&["a", "b::c"]);
        assert_eq!(name, "scc(a,b::c)");
        assert_eq!(scc_member_names(&name), vec!["a", "b::c"]);
        assert!(scc_member_names("plain").is_empty());
    }

    #[test]
    fn short_names() {
        assert_eq!(short_name("dpl::Opendp::place"), "place");
        assert_eq!(short_name("pkg.mod.fn"), "fn");
        assert_eq!(short_name("f"), "f");
    }
}
