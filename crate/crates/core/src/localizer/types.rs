use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codegraph::NodeId;
use crate::executor::GateReason;
use crate::flowsim::FlowRunConfig;

/// Nodes and files a plan's interventions will touch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditSurface {
    pub covering_nodes: BTreeSet<NodeId>,
    pub files: BTreeSet<String>,
    /// Intervention index to the covering nodes that implement its target.
    pub coverage: BTreeMap<usize, BTreeSet<NodeId>>,
    pub blast_radius: f64,
    /// Per-node contribution to `blast_radius`.
    pub node_scores: BTreeMap<NodeId, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PreCheck {
    Build,
    UnitTests,
    FlowSmoke,
    Format,
}

/// What a step changes and where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaIntent {
    pub target: NodeId,
    /// Qualified name of the target, used to find it again after edits.
    pub target_name: String,
    pub path: String,
    pub description: String,
    pub patch: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostCondition {
    pub min_composite_improvement: f64,
    pub rollback_on: Vec<GateReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularStep {
    pub step_id: String,
    pub delta_intent: DeltaIntent,
    /// Files a candidate patch for this step may touch.
    pub files: Vec<String>,
    pub pre_checks: Vec<PreCheck>,
    pub run_config: FlowRunConfig,
    pub probes: Vec<String>,
    pub post: PostCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularPlan {
    pub plan_id: String,
    pub steps: Vec<GranularStep>,
    /// Hash of the high-level plan this was assembled from.
    pub provenance: String,
}
