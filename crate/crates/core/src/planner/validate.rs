use super::{AssertionKind, HighLevelPlan, InterventionKind, KnobRange, PlanAssertion};
use crate::codegraph::CodeGraph;
use crate::docmaker::CardStore;

pub const DEFAULT_PROTECTED_TERMS: [&str; 3] = ["legal", "DRC", "sign-off"];

/// Checks each intervention against the graph and the cards of its target.
///
/// A knob whose card records no range passes with a warning message. A
/// protected term found in a target's preconditions must also appear in the
/// intervention's description.
pub fn validate_plan(
    plan: &HighLevelPlan,
    graph: &CodeGraph,
    cards: &CardStore,
    protected_terms: &[String],
) -> Vec<PlanAssertion> {
    let mut out = Vec::new();
    for iv in &plan.interventions {
        let targets = graph.resolve_exact(&iv.target_api);
        out.push(PlanAssertion {
            kind: AssertionKind::ApiExists,
            subject: iv.target_api.clone(),
            passed: !targets.is_empty(),
            message: if targets.is_empty() {
                format!("{} does not resolve in the graph", iv.target_api)
            } else {
                format!("{} resolves to {} node(s)", iv.target_api, targets.len())
            },
        });
        let target_cards: Vec<_> = targets.iter().filter_map(|id| cards.get(*id)).collect();

        if iv.kind == InterventionKind::TuneKnob {
            let (passed, message, subject) = match &iv.knob {
                None => (false, "knob-tuning intervention names no knob".to_string(), iv.target_api.clone()),
                Some(knob) => {
                    let subject = format!("{}:{}", iv.target_api, knob.name);
                    let recorded = target_cards
                        .iter()
                        .flat_map(|c| &c.config_knobs)
                        .find(|k| k.name == knob.name)
                        .and_then(|k| k.range.clone());
                    match recorded {
                        None => {
                            tracing::warn!(knob = %knob.name, target = %iv.target_api, "no recorded range");
                            (true, format!("warning: no recorded range for {}", knob.name), subject)
                        }
                        Some(text) => match KnobRange::parse(&text) {
                            None => (false, format!("recorded range {text:?} is not parseable"), subject),
                            Some(r) if r.contains(&knob.value) => {
                                (true, format!("{} within {text}", knob.value), subject)
                            }
                            Some(_) => (false, format!("{} outside {text}", knob.value), subject),
                        },
                    }
                }
            };
            out.push(PlanAssertion { kind: AssertionKind::ParamInRange, subject, passed, message });
        }

        let hits: Vec<&String> = protected_terms
            .iter()
            .filter(|term| {
                let t = term.to_lowercase();
                target_cards.iter().flat_map(|c| &c.preconditions).any(|p| p.to_lowercase().contains(&t))
            })
            .collect();
        if !hits.is_empty() {
            let desc = iv.description.to_lowercase();
            let unmet: Vec<&str> =
                hits.iter().filter(|t| !desc.contains(&t.to_lowercase())).map(|t| t.as_str()).collect();
            out.push(PlanAssertion {
                kind: AssertionKind::InvariantRespected,
                subject: iv.target_api.clone(),
                passed: unmet.is_empty(),
                message: if unmet.is_empty() {
                    "description addresses every protected precondition".into()
                } else {
                    format!("description does not address {}", unmet.join(", "))
                },
            });
        }
    }
    out
}
