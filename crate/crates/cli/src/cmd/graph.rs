use qorpilot_core::codegraph::{self, CodeGraph, RegistrationPattern};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, load_graph, write_atomic};
use crate::{GraphBuildArgs, LinkArgs};

fn patterns(flags: &[String], config: &Config) -> Result<Vec<RegistrationPattern>, CliError> {
    let specs = if flags.is_empty() { &config.graph.registration } else { flags };
    specs
        .iter()
        .map(|s| {
            RegistrationPattern::parse(s)
                .ok_or_else(|| CliError::Usage(format!("registration pattern {s:?} is not function:arg_index")))
        })
        .collect()
}

fn link_and_condense(
    graph: &CodeGraph,
    pats: &[RegistrationPattern],
    condense: bool,
) -> Result<(CodeGraph, serde_json::Value), CliError> {
    let (linked, report) = codegraph::link_scripts(graph, pats)?;
    let out = if condense { codegraph::condense_sccs(&linked)? } else { linked };
    let summary = json!({
        "registrations": report.registrations,
        "edges_added": report.edges_added,
        "skipped_nonliteral": report.skipped_nonliteral,
        "unresolved_handlers": report.unresolved_handlers,
        "uninvoked": report.uninvoked,
        "condensed": out.is_condensed(),
    });
    Ok((out, summary))
}

pub fn build(args: &GraphBuildArgs, config: &Config) -> Result<u8, CliError> {
    if !args.repo.is_dir() {
        return Err(CliError::MissingArtifact(args.repo.display().to_string()));
    }
    let excludes = if args.exclude.is_empty() { config.graph.exclude.clone() } else { args.exclude.clone() };
    let raw = codegraph::build_graph(&args.repo, None)?;
    let (mut graph, filtered) = codegraph::filter_nodes(&raw, &excludes)?;
    let mut link = serde_json::Value::Null;
    if args.link {
        let (g, summary) = link_and_condense(&graph, &patterns(&[], config)?, true)?;
        graph = g;
        link = summary;
    }
    write_atomic(&args.out, &codegraph::serialize(&graph))?;
    emit(&json!({
        "out": args.out.display().to_string(),
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "removed_nodes": filtered.removed_nodes(),
        "removed_edges": filtered.removed_edges,
        "link": link,
    }));
    Ok(0)
}

pub fn link(args: &LinkArgs, config: &Config) -> Result<u8, CliError> {
    let graph = load_graph(&args.graph)?;
    let (out, mut summary) = link_and_condense(&graph, &patterns(&args.pattern, config)?, !args.no_condense)?;
    write_atomic(&args.out, &codegraph::serialize(&out))?;
    summary["out"] = json!(args.out.display().to_string());
    summary["nodes"] = json!(out.node_count());
    summary["edges"] = json!(out.edge_count());
    emit(&summary);
    Ok(0)
}
