use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::hash::{canonical_json, digest_hex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectiveMetric {
    RoutedWirelength,
    EffectiveClockPeriod,
    Wns,
    Tns,
    Power,
}

impl ObjectiveMetric {
    /// Name of the QoR report field measuring this metric.
    pub fn report_field(self) -> &'static str {
        match self {
            ObjectiveMetric::RoutedWirelength => "routed_wirelength_um",
            ObjectiveMetric::EffectiveClockPeriod => "ecp_ns",
            ObjectiveMetric::Wns => "wns_ns",
            ObjectiveMetric::Tns => "tns_ns",
            ObjectiveMetric::Power => "power_w",
        }
    }

    pub fn lower_is_better(self) -> bool {
        !matches!(self, ObjectiveMetric::Wns | ObjectiveMetric::Tns)
    }

    /// Words used to query the indexes for this metric.
    pub fn query_terms(self) -> &'static str {
        match self {
            ObjectiveMetric::RoutedWirelength => "routed wirelength wire length routing placement",
            ObjectiveMetric::EffectiveClockPeriod => "effective clock period timing slack",
            ObjectiveMetric::Wns => "worst negative slack timing",
            ObjectiveMetric::Tns => "total negative slack timing",
            ObjectiveMetric::Power => "power switching leakage",
        }
    }

    /// Accepts `rwl`, `ecp`, `wns`, `tns`, `power` and the variant names.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rwl" | "routedwirelength" | "routed_wirelength" => Some(ObjectiveMetric::RoutedWirelength),
            "ecp" | "effectiveclockperiod" | "effective_clock_period" => Some(ObjectiveMetric::EffectiveClockPeriod),
            "wns" => Some(ObjectiveMetric::Wns),
            "tns" => Some(ObjectiveMetric::Tns),
            "power" => Some(ObjectiveMetric::Power),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub metric: ObjectiveMetric,
    pub lower_is_better: bool,
    /// Module names a plan may touch, matched against path segments and
    /// qualified-name prefixes.
    pub scope: BTreeSet<String>,
    pub context: String,
}

impl Objective {
    pub fn new(metric: ObjectiveMetric, scope: &[&str], context: &str) -> Result<Self, PlanError> {
        let obj = Objective {
            metric,
            lower_is_better: metric.lower_is_better(),
            scope: scope.iter().map(|s| s.to_string()).collect(),
            context: context.to_string(),
        };
        obj.check()?;
        Ok(obj)
    }

    pub fn check(&self) -> Result<(), PlanError> {
        if self.scope.is_empty() {
            return Err(PlanError::InvalidObjective("scope is empty".into()));
        }
        Ok(())
    }

    pub fn query(&self) -> String {
        let scope: Vec<&str> = self.scope.iter().map(String::as_str).collect();
        format!("{} {} {}", self.metric.query_terms(), scope.join(" "), self.context).trim().to_string()
    }

    pub fn in_scope(&self, path: &str, qualified_name: &str) -> bool {
        self.scope.iter().any(|s| {
            let s = s.to_ascii_lowercase();
            let stem = |seg: &str| seg.split('.').next().unwrap_or(seg).to_ascii_lowercase();
            path.split('/').any(|seg| stem(seg) == s)
                || qualified_name.to_ascii_lowercase().starts_with(&format!("{s}::"))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub statement: String,
    pub evidence: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InterventionKind {
    TuneKnob,
    ModifyCostModel,
    AddMode,
    RestructurePass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnobSetting {
    pub name: String,
    pub value: String,
    pub range: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub kind: InterventionKind,
    pub target_api: String,
    pub knob: Option<KnobSetting>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestedLocation {
    pub qualified_name: String,
    pub rationale: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighLevelPlan {
    pub objective: Objective,
    pub hypotheses: Vec<Hypothesis>,
    pub interventions: Vec<Intervention>,
    pub telemetry: Vec<String>,
    pub suggested_locations: Vec<SuggestedLocation>,
}

impl HighLevelPlan {
    pub fn hash(&self) -> String {
        digest_hex(canonical_json(self))
    }

    /// Structural checks independent of any graph.
    pub fn check_schema(&self) -> Result<(), PlanError> {
        self.objective.check()?;
        if self.interventions.is_empty() {
            return Err(PlanError::SchemaViolation("plan has no interventions".into()));
        }
        if let Some(h) = self.hypotheses.iter().find(|h| h.evidence.is_empty()) {
            return Err(PlanError::SchemaViolation(format!("hypothesis {:?} cites no evidence", h.statement)));
        }
        for (i, iv) in self.interventions.iter().enumerate() {
            if iv.target_api.trim().is_empty() {
                return Err(PlanError::SchemaViolation(format!("intervention {i} names no target")));
            }
            if iv.kind == InterventionKind::TuneKnob {
                let Some(knob) = &iv.knob else {
                    return Err(PlanError::SchemaViolation(format!("intervention {i} tunes no knob")));
                };
                if let Some(range) = &knob.range {
                    let ok = super::KnobRange::parse(range).is_some_and(|r| r.contains(&knob.value));
                    if !ok {
                        return Err(PlanError::SchemaViolation(format!(
                            "intervention {i}: {} = {} outside {range}",
                            knob.name, knob.value
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssertionKind {
    ApiExists,
    ParamInRange,
    InvariantRespected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanAssertion {
    pub kind: AssertionKind,
    pub subject: String,
    pub passed: bool,
    pub message: String,
}

pub fn plan_is_valid(assertions: &[PlanAssertion]) -> bool {
    assertions.iter().all(|a| a.passed)
}
