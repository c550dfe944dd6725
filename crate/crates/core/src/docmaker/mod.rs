//! Bottom-up documentation cards over the condensed graph.

mod card;
mod evidence;
mod run;
mod schedule;
mod synth;

pub use card::{
    parse_card, render_card, validate_card, ConfigKnob, Direction, DocCard, IoEntry, Violation, ViolationKind,
};
pub use evidence::{
    extract_evidence, signature_params, tcl_list, ConfigFlag, EvidenceBundle, NeighborRole, Param, SourceSet,
};
pub use run::{documents, generate_cards, CardStore, DocRun, DocmakerOptions};
pub use schedule::{levels, schedule};
pub use synth::{
    card_from_response, synthesize_card, FallbackSynthesizer, ProcessSynthesizer, Synthesizer, SynthesizerRequest,
    SynthesizerResponse, TokenUsage, CARD_TASK, SECTIONS,
};

use crate::codegraph::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("graph must be condensed first")]
    NotCondensed,
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("{node} calls {callee}, which has no card yet")]
    MissingDependencyCard { node: NodeId, callee: NodeId },
    #[error("no source text for {0}")]
    MissingSource(String),
    #[error("synthesizer unavailable: {0}")]
    SynthesizerUnavailable(String),
    #[error("synthesizer response violates the card schema: {0}")]
    SchemaViolation(String),
    #[error("card for {node} still invalid after a retry: {violations:?}")]
    CardInvalid { node: NodeId, violations: Vec<Violation> },
    #[error("malformed card file at byte {offset}: {reason}")]
    MalformedCardFile { offset: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
