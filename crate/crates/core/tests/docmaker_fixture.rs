use std::collections::BTreeSet;
use std::path::PathBuf;

use qorpilot_core::codegraph::{
    build_graph, condense_sccs, filter_nodes, incremental_update, link_scripts, CodeGraph, NodeKind,
    RegistrationPattern,
};
use qorpilot_core::docmaker::{
    documents, extract_evidence, generate_cards, validate_card, CardStore, DocmakerOptions, FallbackSynthesizer,
    SourceSet, ViolationKind,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn eda_graph(root: &std::path::Path) -> CodeGraph {
    finish(&build_graph(root, None).unwrap())
}

fn finish(raw: &CodeGraph) -> CodeGraph {
    let (linked, _) = link_scripts(raw, &RegistrationPattern::defaults()).unwrap();
    let globs = vec!["third_party/**".to_string(), "**/test/**".to_string()];
    let (filtered, _) = filter_nodes(&linked, &globs).unwrap();
    condense_sccs(&filtered).unwrap()
}

#[test]
fn fallback_cards_cover_fixture_without_violations() {
    let root = fixture("eda_repo");
    let graph = eda_graph(&root);
    let sources = SourceSet::load(&root, &graph).unwrap();
    let mut store = CardStore::new();
    let run =
        generate_cards(&graph, &sources, &FallbackSynthesizer, &mut store, None, &DocmakerOptions::default()).unwrap();
    let documented = graph.nodes().filter(|n| documents(n.kind)).count();
    assert_eq!(store.len(), documented);
    assert_eq!(run.generated.len(), documented);
    assert!(run.retried.is_empty());

    for card in store.iter() {
        let node = graph.node(card.subject).unwrap();
        let ev = extract_evidence(&graph, node.id, &store, &sources).unwrap();
        assert!(validate_card(card, &graph, &ev).is_empty(), "{}", node.qualified_name);
    }

    let cost =
        graph.nodes().find(|n| n.kind == NodeKind::Definition && n.qualified_name == "dpl::displacementCost").unwrap();
    let card = store.get(cost.id).unwrap();
    assert!(card.preconditions.iter().any(|p| p.contains("disp >= 0")));
    assert!(card.config_knobs.is_empty());
    let script = graph.nodes().find(|n| n.kind == NodeKind::File && n.path == "scripts/dpl.tcl").unwrap();
    let knob = &store.get(script.id).unwrap().config_knobs[0];
    assert_eq!(knob.name, "-max_displacement");
    assert_eq!(knob.range.as_deref(), Some("1..10"));
    assert_eq!(knob.default.as_deref(), Some("5"));
}

#[test]
fn bogus_api_is_the_only_violation() {
    let root = fixture("eda_repo");
    let graph = eda_graph(&root);
    let sources = SourceSet::load(&root, &graph).unwrap();
    let mut store = CardStore::new();
    generate_cards(&graph, &sources, &FallbackSynthesizer, &mut store, None, &DocmakerOptions::default()).unwrap();
    let node =
        graph.nodes().find(|n| n.qualified_name == "dpl::detailedPlace" && n.kind == NodeKind::Definition).unwrap();
    let mut card = store.get(node.id).unwrap().clone();
    card.referenced_apis.push("dpl::noSuchFunction".into());
    let ev = extract_evidence(&graph, node.id, &store, &sources).unwrap();
    let v = validate_card(&card, &graph, &ev);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::ApiMissing);
}

#[test]
fn incremental_regeneration_matches_full() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture("eda_repo"), tmp.path());
    let root = tmp.path();
    let before = eda_graph(root);
    let sources = SourceSet::load(root, &before).unwrap();
    let mut store = CardStore::new();
    let opts = DocmakerOptions::default();
    generate_cards(&before, &sources, &FallbackSynthesizer, &mut store, None, &opts).unwrap();

    let path = root.join("src/gpl/Replace.cpp");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("double overflow = 0.1", "double overflow = 0.2")).unwrap();

    let raw = build_graph(root, None).unwrap();
    let update = incremental_update(&raw, &["src/gpl/Replace.cpp".to_string()], root).unwrap();
    let after = finish(&update.graph);
    let dirty: BTreeSet<_> = update.dirty.iter().copied().collect();
    let sources = SourceSet::load(root, &after).unwrap();
    let run = generate_cards(&after, &sources, &FallbackSynthesizer, &mut store, Some(&dirty), &opts).unwrap();
    assert!(!run.generated.is_empty());
    assert!(run.generated.len() < after.nodes().filter(|n| documents(n.kind)).count());

    let mut full = CardStore::new();
    generate_cards(&after, &sources, &FallbackSynthesizer, &mut full, None, &opts).unwrap();
    let a: Vec<_> = store.iter().cloned().collect();
    let b: Vec<_> = full.iter().cloned().collect();
    assert_eq!(a, b);
}

fn copy_dir(from: &std::path::Path, to: &std::path::Path) {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(from).unwrap();
        let dst = to.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&dst).unwrap();
        } else {
            std::fs::copy(entry.path(), &dst).unwrap();
        }
    }
}
