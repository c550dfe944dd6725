//! Sources of candidate and repair patches.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Counterexample, ExecError};
use crate::localizer::GranularStep;
use crate::process::call_json;

#[derive(Clone, Debug, Serialize)]
pub struct ProposalRequest<'a> {
    pub step: &'a GranularStep,
    /// Set when asking for a repair of the current candidate.
    pub failing_log: Option<&'a str>,
    pub counterexamples: &'a [Counterexample],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProposalResponse {
    pub patches: Vec<String>,
}

pub trait DiffProposer: Send + Sync {
    /// Candidate patches for the step, or repair patches (first one used)
    /// when `failing_log` is set.
    fn propose(&self, request: &ProposalRequest<'_>) -> Result<Vec<String>, ExecError>;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedStep {
    #[serde(default)]
    pub candidates: Vec<String>,
    /// Handed out one per repair request, in order.
    #[serde(default)]
    pub repairs: Vec<String>,
}

/// Replays fixed patches per step id.
#[derive(Debug, Default)]
pub struct ScriptedProposer {
    steps: BTreeMap<String, ScriptedStep>,
    repair_cursor: Mutex<BTreeMap<String, usize>>,
}

impl ScriptedProposer {
    pub fn new(steps: BTreeMap<String, ScriptedStep>) -> Self {
        ScriptedProposer { steps, repair_cursor: Mutex::new(BTreeMap::new()) }
    }

    /// Reads `{"<step id>": {"candidates": [...], "repairs": [...]}}`.
    pub fn from_json(bytes: &[u8]) -> Result<Self, ExecError> {
        let steps = serde_json::from_slice(bytes).map_err(|e| ExecError::Proposer(e.to_string()))?;
        Ok(Self::new(steps))
    }
}

impl DiffProposer for ScriptedProposer {
    fn propose(&self, request: &ProposalRequest<'_>) -> Result<Vec<String>, ExecError> {
        let Some(script) = self.steps.get(&request.step.step_id) else {
            return Ok(Vec::new());
        };
        if request.failing_log.is_none() {
            return Ok(script.candidates.clone());
        }
        let mut cursor = self.repair_cursor.lock().expect("repair cursor lock");
        let at = cursor.entry(request.step.step_id.clone()).or_insert(0);
        let out = script.repairs.get(*at).cloned().into_iter().collect();
        *at += 1;
        Ok(out)
    }
}

/// External proposer speaking the JSON stdin/stdout contract.
#[derive(Clone, Debug)]
pub struct ProcessProposer {
    pub cmd: String,
}

impl DiffProposer for ProcessProposer {
    fn propose(&self, request: &ProposalRequest<'_>) -> Result<Vec<String>, ExecError> {
        let resp: ProposalResponse = call_json(&self.cmd, request).map_err(|e| ExecError::Proposer(e.to_string()))?;
        Ok(resp.patches)
    }
}
