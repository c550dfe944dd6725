//! Whole-graph card generation, full or incremental.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use tracing::{info, warn};

use super::card::{parse_card, render_card, validate_card, DocCard, Violation};
use super::evidence::{extract_evidence, SourceSet};
use super::schedule::{levels, schedule};
use super::synth::{display_name, synthesize_with, Synthesizer, TokenUsage};
use super::DocError;
use crate::codegraph::{CodeGraph, NodeId, NodeKind};

/// Cards keyed by subject.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CardStore {
    cards: BTreeMap<NodeId, DocCard>,
}

impl CardStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: NodeId) -> Option<&DocCard> {
        self.cards.get(&id)
    }

    pub fn insert(&mut self, card: DocCard) {
        self.cards.insert(card.subject, card);
    }

    pub fn remove(&mut self, id: NodeId) -> Option<DocCard> {
        self.cards.remove(&id)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DocCard> {
        self.cards.values()
    }

    /// Reads every `*.json` card in `dir`. A missing directory is an empty
    /// store.
    pub fn load_dir(dir: &Path) -> Result<Self, DocError> {
        let mut store = CardStore::new();
        let entries = match std::fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(source) => return Err(io_err(dir, source)),
        };
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
            store.insert(parse_card(&bytes)?);
        }
        Ok(store)
    }

    /// Writes `<dir>/<nodeid>.json` per card and removes card files for
    /// subjects no longer in the store.
    pub fn save_dir(&self, dir: &Path) -> Result<Vec<String>, DocError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let keep: BTreeSet<String> = self.cards.keys().map(|id| format!("{}.json", id.to_hex())).collect();
        for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?.filter_map(Result::ok) {
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".json") && !keep.contains(&name) {
                std::fs::remove_file(entry.path()).map_err(|e| io_err(&entry.path(), e))?;
            }
        }
        let mut written = Vec::new();
        for card in self.cards.values() {
            let name = format!("{}.json", card.subject.to_hex());
            let path = dir.join(&name);
            let bytes = render_card(card);
            if std::fs::read(&path).ok().as_deref() != Some(bytes.as_slice()) {
                let tmp = dir.join(format!(".{name}.tmp"));
                std::fs::write(&tmp, &bytes).map_err(|e| io_err(&tmp, e))?;
                std::fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
            }
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DocError {
    DocError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug)]
pub struct DocmakerOptions {
    /// Synthesizer calls allowed in flight at once.
    pub max_in_flight: usize,
}

impl Default for DocmakerOptions {
    fn default() -> Self {
        DocmakerOptions { max_in_flight: 4 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DocRun {
    /// Nodes whose card was (re)synthesized, in schedule order.
    pub generated: Vec<NodeId>,
    /// Cards dropped because their subject left the graph.
    pub removed: Vec<NodeId>,
    /// Nodes that needed the second attempt.
    pub retried: Vec<NodeId>,
    pub usage: TokenUsage,
}

/// Whether a node gets a card. Callsites are covered by their enclosing
/// definition.
pub fn documents(kind: NodeKind) -> bool {
    kind != NodeKind::Callsite
}

struct Built {
    card: DocCard,
    retried: bool,
    usage: TokenUsage,
}

fn build_card(
    graph: &CodeGraph,
    id: NodeId,
    store: &CardStore,
    sources: &SourceSet,
    synth: &dyn Synthesizer,
) -> Result<Built, DocError> {
    let evidence = extract_evidence(graph, id, store, sources)?;
    let (card, mut usage) = synthesize_with(&evidence, synth, &[])?;
    let violations = validate_card(&card, graph, &evidence);
    if violations.is_empty() {
        return Ok(Built { card, retried: false, usage });
    }
    warn!(node = %id, name = display_name(&evidence), count = violations.len(), "card failed validation; retrying once");
    let notes: Vec<String> = violations.iter().map(|v| format!("{:?}: {}", v.kind, v.detail)).collect();
    let (card, u2) = synthesize_with(&evidence, synth, &notes)?;
    usage += u2;
    let violations: Vec<Violation> = validate_card(&card, graph, &evidence);
    if !violations.is_empty() {
        return Err(DocError::CardInvalid { node: id, violations });
    }
    Ok(Built { card, retried: true, usage })
}

/// Generates cards bottom-up.
///
/// With `dirty = None` every card is rebuilt. Otherwise a node is rebuilt
/// when it is dirty, has no card, or calls a node whose role line changed in
/// this run; the store ends up as a full run would leave it.
pub fn generate_cards(
    graph: &CodeGraph,
    sources: &SourceSet,
    synth: &dyn Synthesizer,
    store: &mut CardStore,
    dirty: Option<&BTreeSet<NodeId>>,
    opts: &DocmakerOptions,
) -> Result<DocRun, DocError> {
    let order = schedule(graph)?;
    let mut run = DocRun::default();
    let stale: Vec<NodeId> = store.cards.keys().copied().filter(|id| !graph.contains_node(*id)).collect();
    for id in stale {
        store.remove(id);
        run.removed.push(id);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.max_in_flight.max(1))
        .build()
        .map_err(|e| DocError::SynthesizerUnavailable(e.to_string()))?;
    let mut role_changed: BTreeSet<NodeId> = BTreeSet::new();

    for level in levels(graph, &order) {
        let todo: Vec<NodeId> = level
            .into_iter()
            .filter(|id| graph.node(*id).is_some_and(|n| documents(n.kind)))
            .filter(|id| match dirty {
                None => true,
                Some(d) => {
                    d.contains(id)
                        || store.get(*id).is_none()
                        || graph.callees(*id).iter().any(|c| role_changed.contains(c))
                }
            })
            .collect();
        let frozen: &CardStore = store;
        let results: Vec<Result<Built, DocError>> =
            pool.install(|| todo.par_iter().map(|id| build_card(graph, *id, frozen, sources, synth)).collect());
        for (id, r) in todo.into_iter().zip(results) {
            let built = r?;
            if store.get(id).map(|c| &c.role) != Some(&built.card.role) {
                role_changed.insert(id);
            }
            if built.retried {
                run.retried.push(id);
            }
            run.usage += built.usage;
            store.insert(built.card);
            run.generated.push(id);
        }
    }
    info!(generated = run.generated.len(), removed = run.removed.len(), "cards generated");
    Ok(run)
}
