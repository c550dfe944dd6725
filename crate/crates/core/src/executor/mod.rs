//! Candidate execution under QoR gates: edits, checks, flows, rollback and
//! bisection.

mod bisect;
mod cache;
mod candidate;
mod checks;
mod patch;
mod proposer;
mod score;
mod step;
mod workspace;

pub use bisect::{bisect, probe_bound, BisectResult};
pub use cache::{cache_key, CacheEntry, FlowCache};
pub use candidate::{
    log_excerpt, CandidateDiff, CandidateState, Counterexample, CounterexampleLog, FailureKind, Transition,
};
pub use checks::{CheckResult, Checker, CommandChecker, SyntaxChecker};
pub use patch::{apply_file_patch, split_patch, Anchor, FilePatch};
pub use proposer::{DiffProposer, ProcessProposer, ProposalRequest, ProposalResponse, ScriptedProposer, ScriptedStep};
pub use score::{
    composite_delta, composite_score, gate, GateConfig, GateDecision, GateReason, MetricModel, MetricTerm,
};
pub use step::{default_rollback_on, Budget, Executor, StepOutcome, PROXY_STAGE};
pub use workspace::{apply_edit, CheckpointId, Workspace};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("patch touches {path}, which is outside the edit surface")]
    PatchOutsideSurface { path: String },
    #[error("target {target} no longer exists")]
    AnchorLost { target: String },
    #[error("hunk context not found in {path}")]
    HunkMismatch { path: String },
    #[error("malformed patch: {0}")]
    MalformedPatch(String),
    #[error("workspace has uncheckpointed changes")]
    DirtyWorkspace,
    #[error("unknown checkpoint {0}")]
    UnknownCheckpoint(usize),
    #[error("metric {0} missing")]
    MissingMetric(String),
    #[error("invalid metric model: {0}")]
    InvalidModel(String),
    #[error("nothing to bisect")]
    EmptyBisect,
    #[error("predicate passed on prefix {prefix} after an earlier failure or precondition")]
    PredicateInconsistent { prefix: usize },
    #[error("illegal candidate transition {from:?} -> {to:?}")]
    IllegalTransition { from: CandidateState, to: CandidateState },
    #[error("flow runner unavailable: {0}")]
    FlowRunnerUnavailable(String),
    #[error("proposer failed: {0}")]
    Proposer(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
