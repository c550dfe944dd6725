//! Candidate diffs, their lifecycle and the counterexample log.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExecError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CandidateState {
    Proposed,
    Proxied,
    Promoted,
    Committed,
    Reverted,
}

impl CandidateState {
    pub fn can_move_to(self, to: CandidateState) -> bool {
        use CandidateState::*;
        matches!((self, to), (Proposed, Proxied) | (Proxied, Promoted) | (Promoted, Committed) | (Promoted, Reverted))
            || (to == Reverted && self != Reverted)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateDiff {
    pub id: String,
    /// The proposed patch followed by any repair patches, in application
    /// order.
    pub patches: Vec<String>,
    pub provenance: String,
    pub state: CandidateState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub candidate: String,
    pub from: CandidateState,
    pub to: CandidateState,
}

impl CandidateDiff {
    pub fn new(id: String, patch: String, step_id: &str) -> Self {
        CandidateDiff { id, patches: vec![patch], provenance: step_id.to_string(), state: CandidateState::Proposed }
    }

    /// Moves to `to`, recording the transition. Illegal moves are errors.
    pub fn advance(&mut self, to: CandidateState, log: &mut Vec<Transition>) -> Result<(), ExecError> {
        if !self.state.can_move_to(to) {
            return Err(ExecError::IllegalTransition { from: self.state, to });
        }
        log.push(Transition { candidate: self.id.clone(), from: self.state, to });
        self.state = to;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    CompileError,
    RuntimeCrash,
    QoRRegression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub step_id: String,
    pub failure_kind: FailureKind,
    pub evidence: String,
    pub candidate_id: String,
}

const EVIDENCE_LIMIT: usize = 4000;

/// Keeps the tail of a log, where compilers and flows report the failure.
pub fn log_excerpt(log: &str) -> String {
    if log.len() <= EVIDENCE_LIMIT {
        return log.to_string();
    }
    let mut start = log.len() - EVIDENCE_LIMIT;
    while !log.is_char_boundary(start) {
        start += 1;
    }
    log[start..].to_string()
}

/// Append-only counterexample store, mirrored to a JSON-lines file when a
/// path is set.
#[derive(Debug, Default)]
pub struct CounterexampleLog {
    path: Option<PathBuf>,
    entries: Vec<Counterexample>,
}

impl CounterexampleLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn at(path: &Path) -> Self {
        CounterexampleLog { path: Some(path.to_path_buf()), entries: Vec::new() }
    }

    pub fn append(&mut self, c: Counterexample) -> Result<(), ExecError> {
        if let Some(path) = &self.path {
            let io = |source| ExecError::Io { path: path.display().to_string(), source };
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            let mut line = serde_json::to_vec(&c).expect("counterexample serializes");
            line.push(b'\n');
            f.write_all(&line).map_err(io)?;
        }
        self.entries.push(c);
        Ok(())
    }

    pub fn entries(&self) -> &[Counterexample] {
        &self.entries
    }
}
