use qorpilot_core::executor::{
    bisect, gate, probe_bound, split_patch, Checker, CommandChecker, GateConfig, GateReason, MetricModel, Workspace,
};
use qorpilot_core::flowsim::{patch_fingerprint, FlowError, FlowRunConfig, FlowRunner, BASELINE_PATCH};
use qorpilot_core::localizer::PreCheck;
use qorpilot_core::QoRReport;
use serde_json::json;
use tracing::{info, warn};

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, read_json};
use crate::BisectArgs;

enum Predicate {
    Command(CommandChecker),
    Flow(Box<FlowPredicate>),
}

struct FlowPredicate {
    runner: Box<dyn FlowRunner>,
    config: FlowRunConfig,
    baseline: QoRReport,
    model: MetricModel,
    gate: GateConfig,
}

impl Predicate {
    /// Whether the workspace at `root`, carrying `patches`, fails.
    fn fails(&self, root: &std::path::Path, patches: &[String]) -> Result<bool, CliError> {
        match self {
            Predicate::Command(c) => Ok(!c.check(PreCheck::Build, root).ok),
            Predicate::Flow(f) => match f.runner.run(&f.config, &patch_fingerprint(patches), root) {
                Ok(report) => {
                    let d = gate(&report, &f.baseline, true, true, &f.model, &f.gate);
                    Ok(d.reasons.iter().any(|r| GateReason::HARD.contains(r)))
                }
                Err(FlowError::FlowCrash { .. }) => Ok(true),
                Err(e) => Err(e.into()),
            },
        }
    }
}

fn touched(patch: &str) -> Result<Vec<String>, CliError> {
    let mut paths = Vec::new();
    for fp in split_patch(patch)? {
        paths.extend(fp.old_path.iter().chain(fp.new_path.iter()).cloned());
    }
    Ok(paths)
}

/// Applies growing prefixes of the patch list to the workspace and reports
/// the first patch whose prefix fails. The workspace is restored before
/// returning.
pub fn run(args: &BisectArgs, config: &Config) -> Result<u8, CliError> {
    let patches: Vec<String> = read_json(&args.patches)?;
    let mut ws = Workspace::open(&args.repo)?;
    let base = ws.head();
    let predicate = match &args.check_cmd {
        Some(cmd) => {
            let mut c = CommandChecker::default();
            c.commands.insert(PreCheck::Build, cmd.clone());
            Predicate::Command(c)
        }
        None => {
            let (runner, _) = super::flow_runner(&args.runner, config)?;
            let flow = super::flow_config(&args.flow, config)?;
            let baseline = runner.run(&flow, BASELINE_PATCH, ws.root())?;
            let weights = super::weights(&args.weights, config)?;
            let weights = if weights.is_empty() { MetricModel::default_weights() } else { weights };
            let model = MetricModel::from_partial_baseline(&weights, &baseline)?;
            let gate =
                GateConfig { wns_degradation_threshold_ns: config.executor.wns_threshold_ns, ..GateConfig::default() };
            Predicate::Flow(Box::new(FlowPredicate { runner, config: flow, baseline, model, gate }))
        }
    };
    let mut failure = None;
    let mut probe = |k: usize| -> bool {
        if failure.is_some() {
            return true;
        }
        let result = (|| {
            ws.rollback(base)?;
            for p in &patches[..k] {
                if let Err(e) = ws.apply_patch(p, &touched(p)?, None) {
                    warn!(prefix = k, error = %e, "patch did not apply; prefix counts as failing");
                    return Ok(true);
                }
            }
            predicate.fails(ws.root(), &patches[..k])
        })();
        match result {
            Ok(f) => {
                info!(prefix = k, fails = f, "probe");
                f
            }
            Err(e) => {
                failure = Some(e);
                true
            }
        }
    };
    let outcome = bisect(patches.len(), &mut probe);
    ws.rollback(base)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let r = outcome?;
    emit(&json!({
        "culprit": r.culprit,
        "probes": r.probes,
        "probe_bound": probe_bound(patches.len()),
        "patch": patches[r.culprit - 1],
    }));
    Ok(0)
}
