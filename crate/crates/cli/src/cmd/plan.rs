use qorpilot_core::docmaker::CardStore;
use qorpilot_core::planner::{
    plan_is_valid, retrieve_context, synthesize_plan, validate_plan, FallbackPlanner, HighLevelPlan, Objective,
    ObjectiveMetric, PlanSynthesizer, ProcessPlanner,
};
use qorpilot_core::retrieval::load_index;
use serde_json::json;

use super::index::{LITERATURE_DIR, REPO_DIR};
use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, load_graph, read_json, write_json};
use crate::PlanArgs;

/// Exits 2 when any assertion fails; the assertion list is printed either
/// way.
pub fn run(args: &PlanArgs, config: &Config) -> Result<u8, CliError> {
    let graph = load_graph(&args.graph)?;
    let cards = CardStore::load_dir(&args.cards)?;
    let mut evidence_count = None;
    let plan: HighLevelPlan = match &args.from {
        Some(path) => {
            let plan: HighLevelPlan = read_json(path)?;
            plan.check_schema()?;
            plan
        }
        None => {
            let dir = args
                .index
                .as_ref()
                .ok_or_else(|| CliError::Usage("plan needs --index (or --from to validate an existing plan)".into()))?;
            let metric = ObjectiveMetric::parse(&args.objective)
                .ok_or_else(|| CliError::Usage(format!("unknown objective {:?}", args.objective)))?;
            let scope: Vec<&str> = args.scope.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
            let objective = Objective::new(metric, &scope, &args.context)?;
            let mut repo = load_index(&dir.join(REPO_DIR))?;
            repo.attach_graph(&graph);
            let lit = load_index(&dir.join(LITERATURE_DIR))?;
            let embedder = super::embedder(args.embed_cmd.as_ref(), &config.index);
            let k = args.k.unwrap_or(config.planner.k);
            let lambda = args.lambda.unwrap_or(config.planner.lambda);
            let evidence = retrieve_context(&objective, &repo, &lit, k, lambda, embedder.as_ref())?;
            evidence_count = Some(evidence.len());
            let synth: Box<dyn PlanSynthesizer> = match args.synth_cmd.as_ref().or(config.planner.synth_cmd.as_ref()) {
                Some(cmd) => Box::new(ProcessPlanner { cmd: cmd.clone() }),
                None => Box::new(FallbackPlanner),
            };
            synthesize_plan(&objective, &evidence, &graph, &cards, synth.as_ref())?
        }
    };
    let assertions = validate_plan(&plan, &graph, &cards, &config.planner.protected_terms);
    let valid = plan_is_valid(&assertions);
    if let Some(out) = &args.out {
        write_json(out, &plan)?;
    }
    emit(&json!({
        "plan_hash": plan.hash(),
        "interventions": plan.interventions.len(),
        "evidence": evidence_count,
        "valid": valid,
        "assertions": assertions,
    }));
    Ok(if valid { 0 } else { 2 })
}
