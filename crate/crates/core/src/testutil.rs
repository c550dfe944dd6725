use std::path::PathBuf;

use crate::codegraph::{build_graph, condense_sccs, filter_nodes, link_scripts, CodeGraph, RegistrationPattern};
use crate::docmaker::{generate_cards, CardStore, DocmakerOptions, FallbackSynthesizer, SourceSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn eda_pipeline() -> (CodeGraph, SourceSet, CardStore) {
    let root = fixture("eda_repo");
    let raw = build_graph(&root, None).unwrap();
    let (linked, _) = link_scripts(&raw, &RegistrationPattern::defaults()).unwrap();
    let globs = vec!["third_party/**".to_string(), "**/test/**".to_string()];
    let (filtered, _) = filter_nodes(&linked, &globs).unwrap();
    let graph = condense_sccs(&filtered).unwrap();
    let sources = SourceSet::load(&root, &graph).unwrap();
    let mut cards = CardStore::new();
    generate_cards(&graph, &sources, &FallbackSynthesizer, &mut cards, None, &DocmakerOptions::default()).unwrap();
    (graph, sources, cards)
}
