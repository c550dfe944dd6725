pub mod bisect;
pub mod docs;
pub mod graph;
pub mod index;
pub mod localize;
pub mod plan;
pub mod report;
pub mod run;

use std::path::PathBuf;

use qorpilot_core::flowsim::{parse_flow_config, FlowFixture, FlowRunConfig, FlowRunner, Metric, ProcessFlowRunner};
use qorpilot_core::retrieval::{Embedder, HashingEmbedder, ProcessEmbedder};

use crate::config::{Config, IndexSection};
use crate::error::CliError;
use crate::{FlowConfigArgs, FlowRunnerArgs};

fn split_pair(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("expected KEY=VALUE, got {s:?}")))
}

/// Flow config from, in rising precedence: the `[flow]` section, the
/// `--flow-config` file, then individual flags.
pub fn flow_config(args: &FlowConfigArgs, config: &Config) -> Result<FlowRunConfig, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let f = &config.flow;
    let header = [("DESIGN_NAME", &f.design), ("PLATFORM", &f.platform), ("STAGE", &f.stage)];
    pairs.extend(header.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))));
    pairs.extend(f.params.iter().map(|(k, v)| (k.clone(), v.clone())));
    if let Some(path) = &args.flow_config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file = parse_flow_config(&text)?;
        pairs.push(("DESIGN_NAME".into(), file.design.clone()));
        pairs.push(("PLATFORM".into(), file.pdk.to_string()));
        pairs.push(("STAGE".into(), file.stage.as_str().to_string()));
        pairs.extend(file.parameters);
    }
    let flags = [("DESIGN_NAME", &args.design), ("PLATFORM", &args.platform), ("STAGE", &args.stage)];
    pairs.extend(flags.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))));
    for p in &args.params {
        let (k, v) = split_pair(p)?;
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(FlowRunConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

/// The runner named by flags or config, plus the fixture files it reads.
pub fn flow_runner(args: &FlowRunnerArgs, config: &Config) -> Result<(Box<dyn FlowRunner>, Vec<PathBuf>), CliError> {
    let kind = args.flow_runner.clone().unwrap_or_else(|| config.flow.runner.clone());
    match kind.as_str() {
        "replay" => {
            let paths = if args.fixture.is_empty() { config.flow.fixtures.clone() } else { args.fixture.clone() };
            if paths.is_empty() {
                return Err(CliError::Usage("the replay runner needs at least one --fixture".into()));
            }
            let mut fixture = FlowFixture::new();
            for p in &paths {
                if !p.is_file() {
                    return Err(CliError::MissingArtifact(p.display().to_string()));
                }
                fixture.extend(FlowFixture::load(p)?)?;
            }
            Ok((Box::new(fixture), paths))
        }
        "process" => {
            let cmd = args
                .flow_cmd
                .clone()
                .or_else(|| config.flow.cmd.clone())
                .ok_or_else(|| CliError::Usage("the process runner needs --flow-cmd".into()))?;
            Ok((Box::new(ProcessFlowRunner::new(&cmd)), Vec::new()))
        }
        other => Err(CliError::Usage(format!("unknown flow runner {other:?}; expected replay or process"))),
    }
}

pub fn embedder(cmd: Option<&String>, section: &IndexSection) -> Box<dyn Embedder> {
    match cmd.or(section.embed_cmd.as_ref()) {
        Some(cmd) => Box::new(ProcessEmbedder { cmd: cmd.clone(), dim: section.dim }),
        None => Box::new(HashingEmbedder { dim: section.dim }),
    }
}

/// Weights from `metric=value` flags, else the `[executor]` section; empty
/// means the executor default.
pub fn weights(flags: &[String], config: &Config) -> Result<Vec<(Metric, f64)>, CliError> {
    let pairs: Vec<(String, String)> = if flags.is_empty() {
        config.executor.weights.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    } else {
        flags.iter().map(|s| split_pair(s).map(|(k, v)| (k.to_string(), v.to_string()))).collect::<Result<_, _>>()?
    };
    pairs
        .into_iter()
        .map(|(k, v)| {
            let metric = Metric::from_name(&k).ok_or_else(|| CliError::Usage(format!("unknown metric {k:?}")))?;
            let w: f64 = v.parse().map_err(|_| CliError::Usage(format!("weight {v:?} for {k} is not a number")))?;
            Ok((metric, w))
        })
        .collect()
}
