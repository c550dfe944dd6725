use std::collections::BTreeSet;

use qorpilot_core::docmaker::{
    documents, extract_evidence, generate_cards, CardStore, DocmakerOptions, FallbackSynthesizer, ProcessSynthesizer,
    SourceSet, Synthesizer,
};
use qorpilot_core::NodeId;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, load_graph};
use crate::DocGenArgs;

pub fn run(args: &DocGenArgs, config: &Config) -> Result<u8, CliError> {
    let graph = load_graph(&args.graph)?;
    let sources = SourceSet::load(&args.repo, &graph)?;
    let synth: Box<dyn Synthesizer> = match args.synth_cmd.as_ref().or(config.docmaker.synth_cmd.as_ref()) {
        Some(cmd) => Box::new(ProcessSynthesizer { cmd: cmd.clone() }),
        None => Box::new(FallbackSynthesizer),
    };
    let opts = DocmakerOptions { max_in_flight: args.max_in_flight.unwrap_or(config.docmaker.max_in_flight) };
    let mut store = if args.incremental { CardStore::load_dir(&args.cards)? } else { CardStore::new() };
    let dirty = args.incremental.then(|| stale_cards(&graph, &store, &sources));
    let run = generate_cards(&graph, &sources, synth.as_ref(), &mut store, dirty.as_ref(), &opts)?;
    store.save_dir(&args.cards)?;
    emit(&json!({
        "cards": store.len(),
        "generated": run.generated.len(),
        "removed": run.removed.len(),
        "retried": run.retried.len(),
        "dirty": dirty.map(|d| d.len()),
        "usage": run.usage,
    }));
    Ok(0)
}

/// Nodes whose stored card was built from evidence that no longer matches
/// the sources.
fn stale_cards(graph: &qorpilot_core::CodeGraph, store: &CardStore, sources: &SourceSet) -> BTreeSet<NodeId> {
    graph
        .nodes()
        .filter(|n| documents(n.kind))
        .filter(|n| match (store.get(n.id), extract_evidence(graph, n.id, store, sources)) {
            (Some(card), Ok(ev)) => card.evidence_checksum != ev.checksum(),
            _ => true,
        })
        .map(|n| n.id)
        .collect()
}
