//! Card synthesis: the request/response contract, the extractive fallback and
//! the external-process adapter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::card::{ConfigKnob, DocCard, IoEntry};
use super::evidence::EvidenceBundle;
use super::DocError;
use crate::codegraph::{short_name, NodeKind};
use crate::hash::canonical_json;
use crate::process::{call_json, ProcessError};

/// Section names every response must carry, no more and no fewer.
pub const SECTIONS: [&str; 6] =
    ["role", "inputs_outputs", "preconditions", "postconditions", "config_knobs", "referenced_apis"];

pub const CARD_TASK: &str = "doc_card";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizerRequest {
    pub task: String,
    /// Canonical JSON of the evidence bundle.
    pub evidence: String,
    pub sections: Vec<String>,
    /// Problems with the previous attempt, on a retry.
    #[serde(default)]
    pub violations: Vec<String>,
}

impl SynthesizerRequest {
    pub fn for_evidence(evidence: &EvidenceBundle) -> Self {
        SynthesizerRequest {
            task: CARD_TASK.into(),
            evidence: String::from_utf8(canonical_json(evidence)).expect("JSON is UTF-8"),
            sections: SECTIONS.iter().map(|s| s.to_string()).collect(),
            violations: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, other: TokenUsage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizerResponse {
    pub sections: BTreeMap<String, Value>,
    #[serde(default)]
    pub usage: TokenUsage,
}

pub trait Synthesizer: Send + Sync {
    /// `evidence` is the structured form of `request.evidence`.
    fn synthesize(
        &self,
        request: &SynthesizerRequest,
        evidence: &EvidenceBundle,
    ) -> Result<SynthesizerResponse, DocError>;
}

/// Deterministic template over the evidence. Uses no model.
#[derive(Clone, Copy, Debug, Default)]
pub struct FallbackSynthesizer;

impl FallbackSynthesizer {
    pub fn role(evidence: &EvidenceBundle) -> String {
        match evidence.kind {
            NodeKind::File => {
                let file = evidence.path.rsplit('/').next().unwrap_or(&evidence.path);
                let stem = file.split('.').next().unwrap_or(file);
                format!("Module {stem}")
            }
            NodeKind::SccGroup => {
                let inner = evidence
                    .qualified_name
                    .strip_prefix("scc(")
                    .and_then(|s| s.strip_suffix(')'))
                    .unwrap_or(&evidence.qualified_name);
                format!("Groups mutually recursive {}", inner.replace(',', ", "))
            }
            kind => {
                let verb = if kind == NodeKind::Declaration { "Declares" } else { "Defines" };
                match evidence.params() {
                    Some(params) => {
                        let names: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
                        format!("{verb} {}({})", evidence.qualified_name, names.join(", "))
                    }
                    None => format!("{verb} {}", evidence.qualified_name),
                }
            }
        }
    }
}

impl Synthesizer for FallbackSynthesizer {
    fn synthesize(
        &self,
        _request: &SynthesizerRequest,
        evidence: &EvidenceBundle,
    ) -> Result<SynthesizerResponse, DocError> {
        let io: Vec<Value> = match evidence.kind {
            NodeKind::Definition | NodeKind::Declaration => evidence
                .params()
                .unwrap_or_default()
                .iter()
                .map(|p| json!({"name": p.name, "direction": "in", "description": p.text}))
                .collect(),
            _ => Vec::new(),
        };
        let post: Vec<String> = evidence.error_messages.iter().map(|m| format!("reports \"{m}\" on failure")).collect();
        let knobs: Vec<Value> = evidence
            .config_flags
            .iter()
            .map(|f| json!({"name": f.name, "default": f.default, "range": f.range}))
            .collect();
        let mut apis: Vec<&str> = evidence.neighbors.iter().map(|n| n.qualified_name.as_str()).collect();
        apis.sort();
        apis.dedup();
        let mut sections = BTreeMap::new();
        sections.insert("role".to_string(), json!(Self::role(evidence)));
        sections.insert("inputs_outputs".to_string(), json!(io));
        sections.insert("preconditions".to_string(), json!(evidence.assertions));
        sections.insert("postconditions".to_string(), json!(post));
        sections.insert("config_knobs".to_string(), json!(knobs));
        sections.insert("referenced_apis".to_string(), json!(apis));
        Ok(SynthesizerResponse { sections, usage: TokenUsage::default() })
    }
}

/// External synthesizer speaking the JSON stdin/stdout contract.
#[derive(Clone, Debug)]
pub struct ProcessSynthesizer {
    pub cmd: String,
}

impl Synthesizer for ProcessSynthesizer {
    fn synthesize(
        &self,
        request: &SynthesizerRequest,
        _evidence: &EvidenceBundle,
    ) -> Result<SynthesizerResponse, DocError> {
        call_json(&self.cmd, request).map_err(|e| match e {
            ProcessError::Decode { source, .. } => {
                DocError::SchemaViolation(format!("response is not valid JSON: {source}"))
            }
            other => DocError::SynthesizerUnavailable(other.to_string()),
        })
    }
}

fn section<T: serde::de::DeserializeOwned>(sections: &BTreeMap<String, Value>, name: &str) -> Result<T, DocError> {
    let v = sections.get(name).ok_or_else(|| DocError::SchemaViolation(format!("missing section {name}")))?;
    serde_json::from_value(v.clone()).map_err(|e| DocError::SchemaViolation(format!("section {name}: {e}")))
}

/// Turns a synthesizer response into a card, rejecting missing, extra or
/// ill-typed sections.
pub fn card_from_response(evidence: &EvidenceBundle, response: &SynthesizerResponse) -> Result<DocCard, DocError> {
    if let Some(extra) = response.sections.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(DocError::SchemaViolation(format!("unknown section {extra}")));
    }
    let s = &response.sections;
    let inputs_outputs: Vec<IoEntry> = section(s, "inputs_outputs")?;
    let mut referenced_apis: Vec<String> = section(s, "referenced_apis")?;
    referenced_apis.sort();
    referenced_apis.dedup();
    Ok(DocCard {
        subject: evidence.subject,
        role: section(s, "role")?,
        inputs_outputs,
        preconditions: section(s, "preconditions")?,
        postconditions: section(s, "postconditions")?,
        config_knobs: section::<Vec<ConfigKnob>>(s, "config_knobs")?,
        referenced_apis,
        evidence_checksum: evidence.checksum(),
    })
}

/// Asks `synthesizer` for a card over `evidence`.
pub fn synthesize_card(evidence: &EvidenceBundle, synthesizer: &dyn Synthesizer) -> Result<DocCard, DocError> {
    synthesize_with(evidence, synthesizer, &[]).map(|(card, _)| card)
}

pub(crate) fn synthesize_with(
    evidence: &EvidenceBundle,
    synthesizer: &dyn Synthesizer,
    violations: &[String],
) -> Result<(DocCard, TokenUsage), DocError> {
    let mut request = SynthesizerRequest::for_evidence(evidence);
    request.violations = violations.to_vec();
    let response = synthesizer.synthesize(&request, evidence)?;
    Ok((card_from_response(evidence, &response)?, response.usage))
}

/// Short display name for logs.
pub(crate) fn display_name(evidence: &EvidenceBundle) -> &str {
    short_name(&evidence.qualified_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::{Language, NodeId};
    use crate::docmaker::evidence::{ConfigFlag, NeighborRole};

    fn evidence(kind: NodeKind, sig: Option<&str>) -> EvidenceBundle {
        EvidenceBundle {
            subject: NodeId(3),
            kind,
            language: Language::Cpp,
            path: "src/dpl/Opendp.cpp".into(),
            qualified_name: "dpl::Opendp::place".into(),
            signatures: sig.into_iter().map(str::to_string).collect(),
            default_params: vec![("k".into(), "8".into())],
            assertions: vec!["x > 0".into()],
            config_flags: vec![ConfigFlag {
                name: "-max_displacement".into(),
                default: Some("5".into()),
                range: Some("1..10".into()),
                span: (0, 17),
            }],
            error_messages: vec!["bad site".into()],
            neighbors: vec![NeighborRole {
                id: NodeId(1),
                qualified_name: "dpl::Grid::init".into(),
                role: "Defines dpl::Grid::init()".into(),
            }],
        }
    }

    #[test]
    fn fallback_card_is_exact() {
        let ev = evidence(NodeKind::Definition, Some("void dpl::Opendp::place(int x, int k = 8)"));
        let card = synthesize_card(&ev, &FallbackSynthesizer).unwrap();
        assert_eq!(card.role, "Defines dpl::Opendp::place(x, k)");
        assert_eq!(card.inputs_outputs.len(), 2);
        assert_eq!(card.inputs_outputs[1].description, "int k = 8");
        assert_eq!(card.preconditions, ["x > 0"]);
        assert_eq!(card.postconditions, ["reports \"bad site\" on failure"]);
        assert_eq!(card.config_knobs[0].range.as_deref(), Some("1..10"));
        assert_eq!(card.referenced_apis, ["dpl::Grid::init"]);
        assert_eq!(card.evidence_checksum, ev.checksum());
    }

    #[test]
    fn file_role_uses_stem() {
        let mut ev = evidence(NodeKind::File, None);
        ev.config_flags.clear();
        let card = synthesize_card(&ev, &FallbackSynthesizer).unwrap();
        assert_eq!(card.role, "Module Opendp");
        assert!(card.inputs_outputs.is_empty());
    }

    #[test]
    fn extra_or_missing_section_rejected() {
        struct Extra;
        impl Synthesizer for Extra {
            fn synthesize(&self, r: &SynthesizerRequest, e: &EvidenceBundle) -> Result<SynthesizerResponse, DocError> {
                let mut resp = FallbackSynthesizer.synthesize(r, e)?;
                resp.sections.insert("examples".into(), json!([]));
                Ok(resp)
            }
        }
        struct Missing;
        impl Synthesizer for Missing {
            fn synthesize(&self, r: &SynthesizerRequest, e: &EvidenceBundle) -> Result<SynthesizerResponse, DocError> {
                let mut resp = FallbackSynthesizer.synthesize(r, e)?;
                resp.sections.remove("postconditions");
                Ok(resp)
            }
        }
        let ev = evidence(NodeKind::Definition, Some("void f()"));
        assert!(matches!(synthesize_card(&ev, &Extra), Err(DocError::SchemaViolation(_))));
        assert!(matches!(synthesize_card(&ev, &Missing), Err(DocError::SchemaViolation(_))));
    }

    #[test]
    fn checksum_tracks_every_field() {
        let base = evidence(NodeKind::Definition, Some("void f()"));
        let mut variants = Vec::new();
        let mut e = base.clone();
        e.signatures.push("x".into());
        variants.push(e);
        let mut e = base.clone();
        e.default_params.clear();
        variants.push(e);
        let mut e = base.clone();
        e.assertions[0].push('!');
        variants.push(e);
        let mut e = base.clone();
        e.config_flags[0].span.1 += 1;
        variants.push(e);
        let mut e = base.clone();
        e.error_messages.clear();
        variants.push(e);
        let mut e = base.clone();
        e.neighbors[0].role.push('.');
        variants.push(e);
        for v in variants {
            assert_ne!(v.checksum(), base.checksum());
        }
    }

    #[test]
    fn unavailable_process_synthesizer() {
        let ev = evidence(NodeKind::Definition, Some("void f()"));
        let s = ProcessSynthesizer { cmd: "exit 3".into() };
        assert!(matches!(synthesize_card(&ev, &s), Err(DocError::SynthesizerUnavailable(_))));
    }
}
