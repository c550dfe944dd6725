//! Unified code property graph over a multi-language repository.

mod build;
mod condense;
mod extract;
mod filter;
mod incremental;
mod link;
pub mod parse;
mod serial;
mod sparsify;
mod types;

pub use build::{build_graph, BuildMetadata};
pub use condense::{condense_sccs, strongly_connected_components};
pub use filter::{filter_nodes, FilterReport};
pub use incremental::{incremental_update, IncrementalUpdate, DIRTY_HOPS};
pub use link::{link_scripts, LinkReport, RegistrationPattern};
pub use parse::{parse_source, SyntaxNode, SyntaxTree};
pub use serial::{deserialize, serialize};
pub use sparsify::{sparsify, DEFAULT_MAX_OUT_DEGREE, UNBOUNDED};
pub use types::{short_name, CodeGraph, EdgeKind, GraphEdge, GraphNode, Language, NodeId, NodeKind, Span};

pub(crate) use build::{file_entities, scan_repo};
pub(crate) use extract::collapse_ws;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("repository contains no accepted source files")]
    EmptyRepository,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(Language),
    #[error("input is not valid UTF-8 (first bad byte at offset {0})")]
    UndecodableBytes(usize),
    #[error("parser failure: {0}")]
    Parser(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("edge {kind:?} {src} -> {dst} references a missing node")]
    DanglingEdge { src: NodeId, dst: NodeId, kind: EdgeKind },
    #[error("script_invokes edge {src} -> {dst} must go from a script to C/C++")]
    InvalidScriptEdge { src: NodeId, dst: NodeId },
    #[error("edge weight must be nonnegative, got {0}")]
    NegativeWeight(f64),
    #[error("SCC group {0} has no members")]
    EmptyGroup(NodeId),
    #[error("graph is already condensed")]
    AlreadyCondensed,
    #[error("graph must be condensed first")]
    NotCondensed,
    #[error("invalid glob {pattern:?}: {reason}")]
    InvalidGlob { pattern: String, reason: String },
    #[error("file {0} was never indexed and does not exist")]
    UnknownFile(String),
    #[error("malformed graph file at byte {offset}: {reason}")]
    MalformedGraphFile { offset: usize, reason: String },
}
