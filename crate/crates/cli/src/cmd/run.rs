use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use qorpilot_core::executor::{
    Budget, CheckResult, Checker, CommandChecker, CounterexampleLog, DiffProposer, Executor, FlowCache,
    ProcessProposer, ScriptedProposer, StepOutcome, SyntaxChecker, Workspace,
};
use qorpilot_core::flowsim::Metric;
use qorpilot_core::localizer::{GranularPlan, PreCheck};
use serde::Serialize;
use tracing::info;

use super::report::{Table, OUTCOMES_FILE};
use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, file_sha256, read, read_json, write_atomic, write_json};
use crate::manifest::{Inputs, RunManifest};
use crate::RunArgs;

pub const COUNTEREXAMPLES_FILE: &str = "counterexamples.jsonl";
pub const PATCHES_FILE: &str = "patches.json";
pub const REPORT_FILE: &str = "report.json";

fn parse_check_kind(s: &str) -> Option<PreCheck> {
    let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
    match norm.as_str() {
        "build" => Some(PreCheck::Build),
        "unittests" | "tests" => Some(PreCheck::UnitTests),
        "flowsmoke" => Some(PreCheck::FlowSmoke),
        "format" => Some(PreCheck::Format),
        _ => None,
    }
}

/// Configured check commands; `Build` without a command is a syntax check.
pub struct PipelineChecker {
    commands: CommandChecker,
}

impl PipelineChecker {
    pub fn from_config(checks: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut commands = CommandChecker::default();
        for (k, cmd) in checks {
            let kind = parse_check_kind(k).ok_or_else(|| CliError::Usage(format!("unknown check kind {k:?}")))?;
            commands.commands.insert(kind, cmd.clone());
        }
        Ok(PipelineChecker { commands })
    }
}

impl Checker for PipelineChecker {
    fn check(&self, kind: PreCheck, workdir: &Path) -> CheckResult {
        if kind == PreCheck::Build && !self.commands.commands.contains_key(&kind) {
            return SyntaxChecker.check(kind, workdir);
        }
        self.commands.check(kind, workdir)
    }
}

#[derive(Serialize)]
struct StepSummary<'a> {
    step_id: &'a str,
    state: &'static str,
    committed: Option<&'a str>,
    composite_delta: Option<f64>,
    score_vs_original: f64,
    counterexamples: usize,
}

fn summarize(o: &StepOutcome) -> StepSummary<'_> {
    let state = if o.committed.is_some() {
        "Committed"
    } else if o.budget_exhausted {
        "BudgetExhausted"
    } else {
        "Reverted"
    };
    StepSummary {
        step_id: &o.step_id,
        state,
        committed: o.committed.as_deref(),
        composite_delta: o.final_decision.as_ref().map(|d| d.composite_delta),
        score_vs_original: o.score_vs_original,
        counterexamples: o.counterexamples.len(),
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

pub fn run(args: &RunArgs, config: &Config) -> Result<u8, CliError> {
    let started = Instant::now();
    let plan_bytes = read(&args.granular_plan)?;
    let gp: GranularPlan = read_json(&args.granular_plan)?;
    let (runner, fixture_paths) = super::flow_runner(&args.runner, config)?;

    let script = args.proposer.as_ref().or(config.executor.proposer_script.as_ref());
    let proposer: Box<dyn DiffProposer> =
        match (script, args.proposer_cmd.as_ref().or(config.executor.proposer_cmd.as_ref())) {
            (Some(path), _) => Box::new(ScriptedProposer::from_json(&read(path)?)?),
            (None, Some(cmd)) => Box::new(ProcessProposer { cmd: cmd.clone() }),
            (None, None) => return Err(CliError::Usage("run needs --proposer or --proposer-cmd".into())),
        };
    let checker = PipelineChecker::from_config(&config.executor.checks)?;
    let weights = super::weights(&args.weights, config)?;

    if !args.repo.is_dir() {
        return Err(CliError::MissingArtifact(args.repo.display().to_string()));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let cx_path = args.out.join(COUNTEREXAMPLES_FILE);
    write_atomic(&cx_path, b"")?;

    let mut workspace = Workspace::open(&args.repo)?;
    let repo_fingerprint = workspace.tree_hash()?;
    let mut exec = Executor::new(workspace, runner.as_ref(), proposer.as_ref(), &checker);
    if !weights.is_empty() {
        exec = exec.with_weights(weights);
    }
    exec.budget = Budget {
        max_candidates: args.max_candidates.unwrap_or(config.executor.max_candidates),
        max_repairs: args.max_repairs.unwrap_or(config.executor.max_repairs),
    };
    exec.gate_config.wns_degradation_threshold_ns = config.executor.wns_threshold_ns;
    if let Some(dir) = &config.executor.cache_dir {
        exec.cache = FlowCache::on_disk(dir)?;
    }
    exec.counterexamples = CounterexampleLog::at(&cx_path);

    let mut timings = BTreeMap::new();
    timings.insert("setup".to_string(), elapsed_ms(started));
    let mut outcomes = Vec::new();
    for step in &gp.steps {
        let t = Instant::now();
        let outcome = exec.run_step(step)?;
        info!(step = %step.step_id, committed = ?outcome.committed, "step finished");
        timings.insert(format!("step.{}", step.step_id), elapsed_ms(t));
        outcomes.push(outcome);
    }
    let workspace_hash = exec.workspace.tree_hash()?;

    let table = Table::from_outcomes(Metric::RoutedWirelengthUm, &outcomes);
    write_json(&args.out.join(OUTCOMES_FILE), &outcomes)?;
    write_json(&args.out.join(PATCHES_FILE), &exec.committed_patches())?;
    write_json(&args.out.join(REPORT_FILE), &table)?;

    let mut plan_hashes = BTreeMap::new();
    plan_hashes.insert("granular_plan".to_string(), qorpilot_core::hash::sha256_hex(&plan_bytes));
    plan_hashes.insert("plan".to_string(), gp.provenance.clone());
    let mut fixture_hashes = BTreeMap::new();
    for p in &fixture_paths {
        fixture_hashes.insert(p.display().to_string(), file_sha256(p)?);
    }
    let mut manifest = RunManifest::new(config.clone(), Inputs { repo_fingerprint, plan_hashes, fixture_hashes });
    for name in [OUTCOMES_FILE, PATCHES_FILE, REPORT_FILE, COUNTEREXAMPLES_FILE] {
        manifest.add_artifact(&args.out, name)?;
    }
    timings.insert("total".to_string(), elapsed_ms(started));
    manifest.timings_ms = timings;
    manifest.write(&args.out)?;

    let steps: Vec<StepSummary> = outcomes.iter().map(summarize).collect();
    emit(&serde_json::json!({
        "plan_id": gp.plan_id,
        "steps": steps,
        "workspace_hash": workspace_hash,
        "committed_patches": exec.committed_patches().len(),
        "out": args.out.display().to_string(),
    }));
    Ok(0)
}
