//! Documentation cards, their canonical file form and graph validation.

use serde::{Deserialize, Serialize};

use super::evidence::{signature_params, EvidenceBundle};
use super::DocError;
use crate::codegraph::{CodeGraph, NodeId, NodeKind};
use crate::hash::{canonical_json, json_error_offset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
    InOut,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoEntry {
    pub name: String,
    pub direction: Direction,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigKnob {
    pub name: String,
    pub default: Option<String>,
    pub range: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocCard {
    pub subject: NodeId,
    pub role: String,
    pub inputs_outputs: Vec<IoEntry>,
    pub preconditions: Vec<String>,
    pub postconditions: Vec<String>,
    pub config_knobs: Vec<ConfigKnob>,
    pub referenced_apis: Vec<String>,
    pub evidence_checksum: String,
}

impl DocCard {
    /// Number of inputs the card documents.
    pub fn input_arity(&self) -> usize {
        self.inputs_outputs.iter().filter(|e| e.direction != Direction::Out).count()
    }

    /// The card text indexed for retrieval.
    pub fn search_text(&self) -> String {
        let mut parts = vec![self.role.clone()];
        parts.extend(self.inputs_outputs.iter().map(|e| format!("{} {}", e.name, e.description)));
        parts.extend(self.preconditions.iter().cloned());
        parts.extend(self.postconditions.iter().cloned());
        parts.extend(self.config_knobs.iter().map(|k| k.name.clone()));
        parts.extend(self.referenced_apis.iter().cloned());
        parts.join("\n")
    }
}

pub fn render_card(card: &DocCard) -> Vec<u8> {
    canonical_json(card)
}

pub fn parse_card(bytes: &[u8]) -> Result<DocCard, DocError> {
    serde_json::from_slice(bytes)
        .map_err(|e| DocError::MalformedCardFile { offset: json_error_offset(bytes, &e), reason: e.to_string() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    ApiMissing,
    EmptyRole,
    UnknownKnob,
    ArityMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

/// Checks `card` against the graph and the evidence it was built from. An
/// empty list means the card is valid.
pub fn validate_card(card: &DocCard, graph: &CodeGraph, evidence: &EvidenceBundle) -> Vec<Violation> {
    let mut out = Vec::new();
    for api in &card.referenced_apis {
        if graph.resolve_exact(api).is_empty() {
            out.push(Violation {
                kind: ViolationKind::ApiMissing,
                detail: format!("referenced API {api} is not in the graph"),
            });
        }
    }
    if card.role.trim().is_empty() {
        out.push(Violation { kind: ViolationKind::EmptyRole, detail: "role is empty".into() });
    }
    for knob in &card.config_knobs {
        if !evidence.config_flags.iter().any(|f| f.name == knob.name) {
            out.push(Violation {
                kind: ViolationKind::UnknownKnob,
                detail: format!("knob {} matches no extracted flag", knob.name),
            });
        }
    }
    if let Some(node) = graph.node(card.subject) {
        if matches!(node.kind, NodeKind::Definition | NodeKind::Declaration) {
            let params = node
                .signature
                .as_deref()
                .and_then(|s| signature_params(&crate::codegraph::collapse_ws(s), node.language));
            if let Some(params) = params {
                if params.len() != card.input_arity() {
                    out.push(Violation {
                        kind: ViolationKind::ArityMismatch,
                        detail: format!("card lists {} inputs, signature has {}", card.input_arity(), params.len()),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card() -> DocCard {
        DocCard {
            subject: NodeId(7),
            role: "Defines f(k)".into(),
            inputs_outputs: vec![IoEntry {
                name: "k".into(),
                direction: Direction::In,
                description: "int k = 8".into(),
            }],
            preconditions: vec!["k > 0".into()],
            postconditions: vec![],
            config_knobs: vec![ConfigKnob { name: "-density".into(), default: Some("0.7".into()), range: None }],
            referenced_apis: vec!["g".into()],
            evidence_checksum: "00".into(),
        }
    }

    #[test]
    fn round_trip_and_canonical() {
        let c = card();
        let bytes = render_card(&c);
        assert_eq!(parse_card(&bytes).unwrap(), c);
        assert_eq!(render_card(&c), bytes);
        let text = String::from_utf8(bytes).unwrap();
        let order: Vec<usize> = [
            "\"subject\"",
            "\"role\"",
            "\"inputs_outputs\"",
            "\"preconditions\"",
            "\"postconditions\"",
            "\"config_knobs\"",
            "\"referenced_apis\"",
            "\"evidence_checksum\"",
        ]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn missing_subject_is_malformed() {
        let mut v = serde_json::to_value(card()).unwrap();
        v.as_object_mut().unwrap().remove("subject");
        let err = parse_card(v.to_string().as_bytes()).unwrap_err();
        assert!(matches!(err, DocError::MalformedCardFile { .. }));
    }
}
