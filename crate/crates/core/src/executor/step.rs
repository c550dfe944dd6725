//! The per-step search loop: propose, check, repair, proxy, promote, commit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::cache::{cache_key, CacheEntry, FlowCache};
use super::candidate::{
    log_excerpt, CandidateDiff, CandidateState, Counterexample, CounterexampleLog, FailureKind, Transition,
};
use super::checks::Checker;
use super::patch::Anchor;
use super::proposer::{DiffProposer, ProposalRequest};
use super::score::{composite_score, gate, GateConfig, GateDecision, GateReason, MetricModel};
use super::workspace::Workspace;
use super::ExecError;
use crate::flowsim::{patch_fingerprint, FlowError, FlowRunConfig, FlowRunner, Metric, QoRReport, Stage};
use crate::localizer::{GranularStep, PreCheck};

/// Stage candidates are ranked at before promotion.
pub const PROXY_STAGE: Stage = Stage::GlobalRoute;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_candidates: usize,
    pub max_repairs: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_candidates: 4, max_repairs: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step_id: String,
    /// Id of the committed candidate, if any.
    pub committed: Option<String>,
    pub candidates: Vec<CandidateDiff>,
    pub proxy_decisions: BTreeMap<String, GateDecision>,
    /// Full-stage decision for the promoted candidate.
    pub final_decision: Option<GateDecision>,
    /// Full-stage report the step started from.
    pub baseline: QoRReport,
    /// Full-stage report of the promoted candidate.
    pub report: Option<QoRReport>,
    /// No candidate was committed within the budget.
    pub budget_exhausted: bool,
    pub counterexamples: Vec<Counterexample>,
    pub workspace_hash: String,
    /// Composite score of the committed state against the first baseline
    /// measured for this design.
    pub score_vs_original: f64,
}

/// Owns the workspace and drives steps one at a time.
pub struct Executor<'a> {
    pub workspace: Workspace,
    flow: &'a dyn FlowRunner,
    proposer: &'a dyn DiffProposer,
    checker: &'a dyn Checker,
    weights: Vec<(Metric, f64)>,
    models: BTreeMap<(String, String, Stage), MetricModel>,
    pub gate_config: GateConfig,
    pub budget: Budget,
    pub cache: FlowCache,
    pub counterexamples: CounterexampleLog,
    pub transitions: Vec<Transition>,
    committed_patches: Vec<String>,
    flow_calls: usize,
}

enum Prepared {
    Ready,
    Failed(FailureKind, String),
}

impl<'a> Executor<'a> {
    pub fn new(
        workspace: Workspace,
        flow: &'a dyn FlowRunner,
        proposer: &'a dyn DiffProposer,
        checker: &'a dyn Checker,
    ) -> Self {
        Executor {
            workspace,
            flow,
            proposer,
            checker,
            weights: MetricModel::default_weights(),
            models: BTreeMap::new(),
            gate_config: GateConfig::default(),
            budget: Budget::default(),
            cache: FlowCache::in_memory(),
            counterexamples: CounterexampleLog::in_memory(),
            transitions: Vec::new(),
            committed_patches: Vec::new(),
            flow_calls: 0,
        }
    }

    pub fn with_weights(mut self, weights: Vec<(Metric, f64)>) -> Self {
        self.weights = weights;
        self
    }

    /// Patches committed so far, in order.
    pub fn committed_patches(&self) -> &[String] {
        &self.committed_patches
    }

    /// Flow-runner invocations that missed the cache.
    pub fn flow_calls(&self) -> usize {
        self.flow_calls
    }

    /// Model normalizing against the first baseline measured for this
    /// design, platform and stage.
    pub fn model_for(&self, config: &FlowRunConfig) -> Option<&MetricModel> {
        self.models.get(&model_key(config))
    }

    fn model(&mut self, config: &FlowRunConfig, baseline: &QoRReport) -> Result<MetricModel, ExecError> {
        let key = model_key(config);
        if !self.models.contains_key(&key) {
            let m = MetricModel::from_partial_baseline(&self.weights, baseline)?;
            self.models.insert(key.clone(), m);
        }
        Ok(self.models[&key].clone())
    }

    fn measure(&mut self, config: &FlowRunConfig, patches: &[String]) -> Result<QoRReport, FlowError> {
        let tree = self.workspace.tree_hash().map_err(|e| FlowError::RunnerUnavailable(e.to_string()))?;
        let key = cache_key(config, &tree);
        if let Some(hit) = self.cache.lookup(&key) {
            return Ok(hit.report);
        }
        self.flow_calls += 1;
        let report = self.flow.run(config, &patch_fingerprint(patches), self.workspace.root())?;
        if let Err(e) = self.cache.store(CacheEntry::new(&key, report.clone(), Vec::new())) {
            warn!(error = %e, "could not store flow result");
        }
        Ok(report)
    }

    fn measure_step(&mut self, config: &FlowRunConfig, extra: &[String]) -> Result<QoRReport, FlowError> {
        let mut patches = self.committed_patches.clone();
        patches.extend_from_slice(extra);
        self.measure(config, &patches)
    }

    fn record(
        &mut self,
        step: &GranularStep,
        cand: &CandidateDiff,
        kind: FailureKind,
        log: &str,
        added: &mut Vec<Counterexample>,
    ) -> Result<(), ExecError> {
        let c = Counterexample {
            step_id: step.step_id.clone(),
            failure_kind: kind,
            evidence: log_excerpt(log),
            candidate_id: cand.id.clone(),
        };
        self.counterexamples.append(c.clone())?;
        added.push(c);
        Ok(())
    }

    fn run_checks(&self, step: &GranularStep) -> Option<(PreCheck, String)> {
        let mut kinds = step.pre_checks.clone();
        if !kinds.contains(&PreCheck::Build) {
            kinds.insert(0, PreCheck::Build);
        }
        for kind in kinds {
            let r = self.checker.check(kind, self.workspace.root());
            if !r.ok {
                return Some((kind, r.log));
            }
        }
        None
    }

    /// Applies the candidate and runs pre-checks, asking the proposer for up
    /// to `max_repairs` fixes when a check fails.
    fn prepare(&mut self, step: &GranularStep, cand: &mut CandidateDiff) -> Result<Prepared, ExecError> {
        let anchor = Anchor { path: &step.delta_intent.path, qualified_name: &step.delta_intent.target_name };
        if let Err(e) = self.workspace.apply_patch(&cand.patches[0], &step.files, Some(anchor)) {
            if matches!(e, ExecError::Io { .. }) {
                return Err(e);
            }
            return Ok(Prepared::Failed(FailureKind::CompileError, format!("patch did not apply: {e}")));
        }
        let mut failure = self.run_checks(step);
        let mut rounds = 0;
        while let Some((_, log)) = &failure {
            if rounds == self.budget.max_repairs {
                break;
            }
            rounds += 1;
            let request =
                ProposalRequest { step, failing_log: Some(log), counterexamples: self.counterexamples.entries() };
            let Some(fix) = self.proposer.propose(&request)?.into_iter().next() else {
                break;
            };
            match self.workspace.apply_patch(&fix, &step.files, Some(anchor)) {
                Ok(()) => {
                    cand.patches.push(fix);
                    failure = self.run_checks(step);
                }
                Err(ExecError::Io { path, source }) => return Err(ExecError::Io { path, source }),
                Err(e) => warn!(candidate = %cand.id, error = %e, "repair patch did not apply"),
            }
        }
        Ok(match failure {
            None => Prepared::Ready,
            Some((kind, log)) => {
                let fk = match kind {
                    PreCheck::Build | PreCheck::Format => FailureKind::CompileError,
                    PreCheck::UnitTests | PreCheck::FlowSmoke => FailureKind::RuntimeCrash,
                };
                Prepared::Failed(fk, format!("{kind:?} failed after {rounds} repair round(s)\n{log}"))
            }
        })
    }

    fn flow_failure(e: FlowError) -> Result<(FailureKind, String), ExecError> {
        match e {
            FlowError::FlowCrash { log } => Ok((FailureKind::RuntimeCrash, log)),
            other => Err(ExecError::FlowRunnerUnavailable(other.to_string())),
        }
    }

    /// Runs one granular step. The workspace ends at a committed checkpoint
    /// whether or not a candidate is accepted; runner and I/O failures are
    /// returned as errors after rolling back.
    pub fn run_step(&mut self, step: &GranularStep) -> Result<StepOutcome, ExecError> {
        let head = self.workspace.head();
        self.workspace.rollback(head)?;
        let result = self.run_step_inner(step);
        if result.is_err() {
            self.workspace.rollback(self.workspace.head())?;
        }
        result
    }

    fn run_step_inner(&mut self, step: &GranularStep) -> Result<StepOutcome, ExecError> {
        let full_cfg = step.run_config.clone();
        let proxy_cfg = full_cfg.with_stage(PROXY_STAGE);
        let base_full = self
            .measure_step(&full_cfg, &[])
            .map_err(|e| ExecError::FlowRunnerUnavailable(format!("baseline run failed: {e}")))?;
        let base_proxy = self
            .measure_step(&proxy_cfg, &[])
            .map_err(|e| ExecError::FlowRunnerUnavailable(format!("baseline proxy run failed: {e}")))?;
        let model = self.model(&full_cfg, &base_full)?;
        let proxy_model = self.model(&proxy_cfg, &base_proxy)?;
        let enforced = step.post.rollback_on.clone();
        let eps = step.post.min_composite_improvement;

        let mut texts: Vec<String> = step.delta_intent.patch.iter().cloned().collect();
        let request = ProposalRequest { step, failing_log: None, counterexamples: self.counterexamples.entries() };
        texts.extend(self.proposer.propose(&request)?);
        texts.truncate(self.budget.max_candidates);

        let mut candidates: Vec<CandidateDiff> = texts
            .into_iter()
            .enumerate()
            .map(|(i, p)| CandidateDiff::new(format!("{}-c{}", step.step_id, i + 1), p, &step.step_id))
            .collect();
        let mut added = Vec::new();
        let mut proxy_decisions = BTreeMap::new();
        let mut survivors: Vec<(f64, usize)> = Vec::new();

        for (i, slot) in candidates.iter_mut().enumerate() {
            let token = self.workspace.checkpoint()?;
            let mut cand = slot.clone();
            let prepared = self.prepare(step, &mut cand)?;
            let failure = match prepared {
                Prepared::Failed(kind, log) => Some((kind, log)),
                Prepared::Ready => match self.measure_step(&proxy_cfg, &cand.patches) {
                    Err(e) => Some(Self::flow_failure(e)?),
                    Ok(report) => {
                        cand.advance(CandidateState::Proxied, &mut self.transitions)?;
                        let d = gate(&report, &base_proxy, true, true, &proxy_model, &self.gate_config)
                            .enforce(&enforced, eps);
                        let passed = d.accepted;
                        let reasons = d.reasons.clone();
                        proxy_decisions.insert(cand.id.clone(), d.clone());
                        if passed {
                            survivors.push((d.composite_delta, i));
                            None
                        } else {
                            Some((FailureKind::QoRRegression, format!("proxy gate rejected: {reasons:?}")))
                        }
                    }
                },
            };
            self.workspace.rollback(token)?;
            if let Some((kind, log)) = failure {
                cand.advance(CandidateState::Reverted, &mut self.transitions)?;
                self.record(step, &cand, kind, &log, &mut added)?;
            }
            *slot = cand;
        }

        survivors.sort_by(|a, b| b.0.total_cmp(&a.0).then(candidates[a.1].id.cmp(&candidates[b.1].id)));
        let mut committed = None;
        let mut final_decision = None;
        let mut final_report = None;
        if let Some(&(_, best)) = survivors.first() {
            let token = self.workspace.checkpoint()?;
            let mut cand = candidates[best].clone();
            cand.advance(CandidateState::Promoted, &mut self.transitions)?;
            let anchor = Anchor { path: &step.delta_intent.path, qualified_name: &step.delta_intent.target_name };
            let mut failure = None;
            for p in &cand.patches {
                if let Err(e) = self.workspace.apply_patch(p, &step.files, Some(anchor)) {
                    failure = Some((FailureKind::CompileError, format!("re-apply failed: {e}")));
                    break;
                }
            }
            if failure.is_none() {
                match self.measure_step(&full_cfg, &cand.patches) {
                    Err(e) => failure = Some(Self::flow_failure(e)?),
                    Ok(report) => {
                        let d =
                            gate(&report, &base_full, true, true, &model, &self.gate_config).enforce(&enforced, eps);
                        if !d.accepted {
                            failure = Some((
                                FailureKind::QoRRegression,
                                format!("full-stage gate rejected: {:?}", d.reasons),
                            ));
                        }
                        final_decision = Some(d);
                        final_report = Some(report);
                    }
                }
            }
            match failure {
                None => {
                    self.workspace.commit()?;
                    self.committed_patches.extend(cand.patches.iter().cloned());
                    cand.advance(CandidateState::Committed, &mut self.transitions)?;
                    info!(step = %step.step_id, candidate = %cand.id, "committed");
                    committed = Some(cand.id.clone());
                }
                Some((kind, log)) => {
                    self.workspace.rollback(token)?;
                    cand.advance(CandidateState::Reverted, &mut self.transitions)?;
                    self.record(step, &cand, kind, &log, &mut added)?;
                }
            }
            candidates[best] = cand;
            for &(_, i) in &survivors[1..] {
                candidates[i].advance(CandidateState::Reverted, &mut self.transitions)?;
            }
        }

        let workspace_hash = self.workspace.tree_hash()?;
        let current = match &committed {
            Some(_) => final_report.clone().expect("committed candidate has a report"),
            None => base_full.clone(),
        };
        let score_vs_original = composite_score(&current, &model).unwrap_or_else(|e| {
            warn!(error = %e, "committed report lacks a weighted metric");
            0.0
        });
        Ok(StepOutcome {
            step_id: step.step_id.clone(),
            budget_exhausted: committed.is_none(),
            committed,
            candidates,
            proxy_decisions,
            final_decision,
            baseline: base_full,
            report: final_report,
            counterexamples: added,
            workspace_hash,
            score_vs_original,
        })
    }

    /// Restores the workspace to checkpoint `to` and marks `candidates`
    /// reverted.
    pub fn rollback(&mut self, to: usize, candidates: &mut [CandidateDiff]) -> Result<(), ExecError> {
        self.workspace.rollback(to)?;
        for c in candidates {
            if c.state != CandidateState::Reverted {
                c.advance(CandidateState::Reverted, &mut self.transitions)?;
            }
        }
        Ok(())
    }
}

fn model_key(config: &FlowRunConfig) -> (String, String, Stage) {
    (config.design.clone(), config.pdk.to_string(), config.stage)
}

/// Gate reasons that trigger a rollback unless a step overrides them.
pub fn default_rollback_on() -> Vec<GateReason> {
    GateReason::HARD.to_vec()
}
