use std::collections::{BTreeMap, BTreeSet};

use super::{DeltaIntent, EditSurface, GranularPlan, GranularStep, LocalizeError, PostCondition, PreCheck};
use crate::codegraph::{CodeGraph, NodeId};
use crate::executor::default_rollback_on;
use crate::flowsim::{FlowRunConfig, Metric};
use crate::hash::{canonical_json, digest_hex, FieldHasher};
use crate::planner::{HighLevelPlan, Intervention, InterventionKind};

/// Minimum normalized composite improvement a step must reach.
pub const DEFAULT_EPSILON: f64 = 0.001;

/// Flow parameter a knob maps to: leading dashes dropped, upper-cased.
pub fn knob_param(name: &str) -> String {
    name.trim_start_matches('-').to_ascii_uppercase()
}

fn rewrites_code(kind: InterventionKind) -> bool {
    kind != InterventionKind::TuneKnob
}

fn conflict(a: &Intervention, b: &Intervention) -> bool {
    if rewrites_code(a.kind) && rewrites_code(b.kind) {
        return true;
    }
    match (&a.knob, &b.knob) {
        (Some(x), Some(y)) => knob_param(&x.name) == knob_param(&y.name) && x.value != y.value,
        _ => false,
    }
}

/// One step per intervention, safest first.
///
/// A step's target is the lowest-scoring covering node implementing its
/// intervention. Steps sort by that node's blast contribution, then node id,
/// then the intervention's canonical form. Two code-rewriting interventions
/// on one node, or two settings of one knob, are a conflict.
pub fn assemble_granular_plan(
    plan: &HighLevelPlan,
    surface: &EditSurface,
    graph: &CodeGraph,
    template: &FlowRunConfig,
) -> Result<GranularPlan, LocalizeError> {
    let mut rows: Vec<(f64, NodeId, Vec<u8>, usize)> = Vec::new();
    for (i, iv) in plan.interventions.iter().enumerate() {
        let nodes = surface.coverage.get(&i).filter(|s| !s.is_empty()).ok_or(LocalizeError::Uncovered(i))?;
        let score = |id: &NodeId| surface.node_scores.get(id).copied().unwrap_or(0.0);
        let target = *nodes
            .iter()
            .min_by(|a, b| score(a).total_cmp(&score(b)).then_with(|| a.cmp(b)))
            .expect("non-empty coverage");
        rows.push((score(&target), target, canonical_json(iv), i));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)));

    let mut by_node: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (_, node, _, i) in &rows {
        for &j in by_node.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            let (a, b) = (&plan.interventions[j], &plan.interventions[*i]);
            if conflict(a, b) {
                return Err(LocalizeError::ConflictingSteps { target: a.target_api.clone(), first: j, second: *i });
            }
        }
        by_node.entry(*node).or_default().push(*i);
    }

    let mut probes: Vec<String> = plan
        .telemetry
        .iter()
        .filter(|m| Metric::from_name(m).is_some())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if probes.is_empty() {
        probes.push(plan.objective.metric.report_field().to_string());
    }

    let mut steps = Vec::new();
    for (n, (_, target, _, i)) in rows.iter().enumerate() {
        let iv = &plan.interventions[*i];
        let node = graph.node(*target).ok_or(LocalizeError::UnknownApi(iv.target_api.clone()))?;
        let mut run_config = template.clone();
        if let Some(k) = &iv.knob {
            run_config.parameters.insert(knob_param(&k.name), k.value.clone());
        }
        let mut pre_checks = vec![PreCheck::Build];
        if rewrites_code(iv.kind) {
            pre_checks.push(PreCheck::UnitTests);
        }
        pre_checks.push(PreCheck::FlowSmoke);
        let files: BTreeSet<String> =
            surface.coverage[i].iter().filter_map(|id| graph.node(*id)).map(|n| n.path.clone()).collect();
        steps.push(GranularStep {
            step_id: format!("s{}", n + 1),
            delta_intent: DeltaIntent {
                target: *target,
                target_name: node.qualified_name.clone(),
                path: node.path.clone(),
                description: iv.description.clone(),
                patch: None,
            },
            files: files.into_iter().collect(),
            pre_checks,
            run_config,
            probes: probes.clone(),
            post: PostCondition { min_composite_improvement: DEFAULT_EPSILON, rollback_on: default_rollback_on() },
        });
    }
    let provenance = plan.hash();
    let plan_id = FieldHasher::new().field(&provenance).field(digest_hex(canonical_json(&steps))).finish_hex();
    Ok(GranularPlan { plan_id, steps, provenance })
}
