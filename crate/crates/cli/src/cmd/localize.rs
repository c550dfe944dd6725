use std::collections::BTreeMap;

use qorpilot_core::localizer::{assemble_granular_plan, localize};
use qorpilot_core::planner::HighLevelPlan;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, load_graph, read_json, write_json};
use crate::LocalizeArgs;

/// Writes the granular plan to `--out`, or prints it when no output path
/// is given.
pub fn run(args: &LocalizeArgs, config: &Config) -> Result<u8, CliError> {
    let plan: HighLevelPlan = read_json(&args.plan)?;
    plan.check_schema()?;
    let graph = load_graph(&args.graph)?;
    let freq_path = args.change_freq.as_ref().or(config.localizer.change_freq.as_ref());
    let freq: Option<BTreeMap<String, u64>> = freq_path.map(|p| read_json(p)).transpose()?;
    let template = super::flow_config(&args.flow, config)?;
    let surface = localize(&plan, &graph, freq.as_ref())?;
    let gp = assemble_granular_plan(&plan, &surface, &graph, &template)?;
    match &args.out {
        Some(out) => {
            write_json(out, &gp)?;
            emit(&json!({
                "out": out.display().to_string(),
                "plan_id": gp.plan_id,
                "steps": gp.steps.iter().map(|s| &s.step_id).collect::<Vec<_>>(),
                "files": surface.files,
                "blast_radius": surface.blast_radius,
            }));
        }
        None => emit(&gp),
    }
    Ok(0)
}
