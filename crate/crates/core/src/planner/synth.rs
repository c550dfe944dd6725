use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    Evidence, HighLevelPlan, Hypothesis, Intervention, InterventionKind, KnobSetting, Objective, PlanError,
    SuggestedLocation,
};
use crate::codegraph::{CodeGraph, NodeKind};
use crate::docmaker::{CardStore, DocCard};
use crate::process::call_json;
use crate::retrieval::DocSource;

pub const PLAN_TASK: &str = "plan";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub doc_id: String,
    pub source: DocSource,
    pub text: String,
    pub qualified_name: Option<String>,
    pub path: Option<String>,
    /// Present for nodes that can be named as a target API.
    pub card: Option<DocCard>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub task: String,
    pub objective: Objective,
    pub evidence: Vec<EvidenceItem>,
}

pub trait PlanSynthesizer: Send + Sync {
    fn synthesize(&self, request: &PlanRequest) -> Result<HighLevelPlan, PlanError>;
}

/// Deterministic template: one knob-tuning intervention per in-scope card
/// knob, set to its default.
#[derive(Clone, Copy, Debug, Default)]
pub struct FallbackPlanner;

impl PlanSynthesizer for FallbackPlanner {
    fn synthesize(&self, req: &PlanRequest) -> Result<HighLevelPlan, PlanError> {
        let obj = &req.objective;
        let field = obj.metric.report_field();
        let mut seen = BTreeSet::new();
        let mut rows: Vec<(String, KnobSetting, String)> = Vec::new();
        for item in &req.evidence {
            let (Some(card), Some(qname), Some(path)) = (&item.card, &item.qualified_name, &item.path) else {
                continue;
            };
            if !obj.in_scope(path, qname) {
                continue;
            }
            for knob in &card.config_knobs {
                let Some(default) = &knob.default else { continue };
                if seen.insert((qname.clone(), knob.name.clone())) {
                    let setting =
                        KnobSetting { name: knob.name.clone(), value: default.clone(), range: knob.range.clone() };
                    rows.push((qname.clone(), setting, item.doc_id.clone()));
                }
            }
        }
        if rows.is_empty() {
            return Err(PlanError::SchemaViolation("evidence exposes no config knob".into()));
        }
        rows.sort_by(|a, b| (&a.0, &a.1.name).cmp(&(&b.0, &b.1.name)));
        let mut telemetry = vec![field.to_string()];
        for extra in ["wns_ns", "tns_ns"] {
            if extra != field {
                telemetry.push(extra.to_string());
            }
        }
        Ok(HighLevelPlan {
            objective: obj.clone(),
            hypotheses: rows
                .iter()
                .map(|(t, k, doc)| Hypothesis {
                    statement: format!("{} of {t} influences {field}", k.name),
                    evidence: vec![doc.clone()],
                })
                .collect(),
            interventions: rows
                .iter()
                .map(|(t, k, _)| Intervention {
                    kind: InterventionKind::TuneKnob,
                    target_api: t.clone(),
                    description: format!("set {} of {t} to {} and measure {field}", k.name, k.value),
                    knob: Some(k.clone()),
                })
                .collect(),
            telemetry,
            suggested_locations: rows
                .iter()
                .map(|(t, k, _)| SuggestedLocation {
                    qualified_name: t.clone(),
                    rationale: format!("exposes {}", k.name),
                })
                .collect(),
        })
    }
}

/// External planner speaking the JSON-over-stdio plugin contract; the
/// response is a plan object.
#[derive(Clone, Debug)]
pub struct ProcessPlanner {
    pub cmd: String,
}

impl PlanSynthesizer for ProcessPlanner {
    fn synthesize(&self, req: &PlanRequest) -> Result<HighLevelPlan, PlanError> {
        call_json(&self.cmd, req).map_err(|e| match e {
            crate::process::ProcessError::Decode { source, .. } => PlanError::SchemaViolation(source.to_string()),
            other => PlanError::SynthesizerUnavailable(other.to_string()),
        })
    }
}

pub fn evidence_items(evidence: &[Evidence], graph: &CodeGraph, cards: &CardStore) -> Vec<EvidenceItem> {
    evidence
        .iter()
        .map(|e| {
            let node = e.subject.and_then(|id| graph.node(id));
            let nameable = node.is_some_and(|n| !matches!(n.kind, NodeKind::File | NodeKind::Callsite));
            EvidenceItem {
                doc_id: e.doc_id.clone(),
                source: e.source,
                text: e.text.clone(),
                qualified_name: node.map(|n| n.qualified_name.clone()),
                path: node.map(|n| n.path.clone()),
                card: if nameable && e.source == DocSource::Card {
                    e.subject.and_then(|id| cards.get(id)).cloned()
                } else {
                    None
                },
            }
        })
        .collect()
}

/// Asks `synth` for a plan over `evidence` and checks it before returning:
/// the schema must hold, hypotheses may only cite supplied evidence, and
/// every target must occur verbatim in the evidence text.
pub fn synthesize_plan(
    objective: &Objective,
    evidence: &[Evidence],
    graph: &CodeGraph,
    cards: &CardStore,
    synth: &dyn PlanSynthesizer,
) -> Result<HighLevelPlan, PlanError> {
    objective.check()?;
    if evidence.is_empty() {
        return Err(PlanError::SchemaViolation("no evidence supplied".into()));
    }
    let request = PlanRequest {
        task: PLAN_TASK.to_string(),
        objective: objective.clone(),
        evidence: evidence_items(evidence, graph, cards),
    };
    let plan = synth.synthesize(&request)?;
    if plan.objective != *objective {
        return Err(PlanError::SchemaViolation("plan objective differs from request".into()));
    }
    plan.check_schema()?;
    let ids: BTreeSet<&str> = evidence.iter().map(|e| e.doc_id.as_str()).collect();
    for h in &plan.hypotheses {
        if let Some(bad) = h.evidence.iter().find(|d| !ids.contains(d.as_str())) {
            return Err(PlanError::SchemaViolation(format!("hypothesis cites unknown evidence {bad}")));
        }
    }
    for iv in &plan.interventions {
        if !evidence.iter().any(|e| e.text.contains(&iv.target_api)) {
            return Err(PlanError::HallucinatedTarget(iv.target_api.clone()));
        }
    }
    Ok(plan)
}
