//! Retrieval-grounded synthesis and validation of high-level plans.

mod context;
mod range;
mod synth;
mod types;
mod validate;

pub use context::{mmr_select, mmr_value, retrieve_context, Evidence, MmrCandidate};
pub use range::KnobRange;
pub use synth::{
    evidence_items, synthesize_plan, EvidenceItem, FallbackPlanner, PlanRequest, PlanSynthesizer, ProcessPlanner,
    PLAN_TASK,
};
pub use types::*;
pub use validate::{validate_plan, DEFAULT_PROTECTED_TERMS};

use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("an index is empty")]
    EmptyIndex,
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("plan synthesizer unavailable: {0}")]
    SynthesizerUnavailable(String),
    #[error("plan schema violation: {0}")]
    SchemaViolation(String),
    #[error("target {0:?} does not occur in the evidence")]
    HallucinatedTarget(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}
