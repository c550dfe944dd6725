use std::collections::BTreeSet;
use std::path::Path;

use super::{DocSource, Embedder, IndexedDoc, RetrievalError};
use crate::codegraph::{CodeGraph, GraphNode, NodeKind};
use crate::docmaker::{CardStore, SourceSet};

/// Lowercased directory components and file stem of `path`.
pub fn path_tags(path: &str) -> BTreeSet<String> {
    let mut parts: Vec<&str> = path.split('/').filter(|p| !p.is_empty() && *p != ".").collect();
    if let Some(last) = parts.pop() {
        let stem = last.split('.').next().unwrap_or(last);
        parts.push(stem);
    }
    parts.into_iter().filter(|p| !p.is_empty()).map(str::to_lowercase).collect()
}

fn snippet_text(node: &GraphNode, sources: &SourceSet) -> Option<String> {
    let src = sources.get(&node.path)?;
    let body = src.get(node.span.start..node.span.end)?;
    Some(format!("{}\n{}\n{}", node.qualified_name, node.path, body))
}

/// Card and snippet documents for every documented node of a condensed
/// graph. Snippets cover definitions, declarations and SCC groups.
pub fn repo_corpus(
    graph: &CodeGraph,
    cards: &CardStore,
    sources: &SourceSet,
    embedder: &dyn Embedder,
) -> Result<Vec<IndexedDoc>, RetrievalError> {
    let mut docs = Vec::new();
    for card in cards.iter() {
        let Some(node) = graph.node(card.subject) else { continue };
        let text = format!("{}\n{}\n{}", node.qualified_name, node.path, card.search_text());
        docs.push(IndexedDoc::new(
            DocSource::Card,
            &card.subject.to_hex(),
            Some(card.subject),
            &text,
            path_tags(&node.path),
            embedder,
        )?);
    }
    for node in graph.nodes() {
        if !matches!(node.kind, NodeKind::Definition | NodeKind::Declaration | NodeKind::SccGroup) {
            continue;
        }
        let Some(text) = snippet_text(node, sources) else { continue };
        docs.push(IndexedDoc::new(
            DocSource::Snippet,
            &node.id.to_hex(),
            Some(node.id),
            &text,
            path_tags(&node.path),
            embedder,
        )?);
    }
    Ok(docs)
}

/// Reads every text file under `dir` as one literature document. A sidecar
/// `<stem>.tags` or `<file>.tags` holds comma-separated tags.
pub fn ingest_literature(dir: &Path, embedder: &dyn Embedder) -> Result<Vec<IndexedDoc>, RetrievalError> {
    let io = |path: &Path, source| RetrievalError::Io { path: path.display().to_string(), source };
    let mut files: Vec<_> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_none_or(|x| x != "tags"))
        .collect();
    files.sort();
    let mut docs = Vec::new();
    for path in files {
        let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
        let text = String::from_utf8_lossy(&bytes);
        let rel = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().replace('\\', "/");
        let mut sidecars = vec![path.with_extension("tags")];
        if path.extension().is_some() {
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".tags");
            sidecars.push(path.with_file_name(name));
        }
        let mut tags = BTreeSet::new();
        for side in sidecars.iter().filter(|p| p.is_file()) {
            let raw = std::fs::read_to_string(side).map_err(|e| io(side, e))?;
            tags.extend(raw.split(',').map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()));
        }
        docs.push(IndexedDoc::new(DocSource::Literature, &rel, None, &text, tags, embedder)?);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::HashingEmbedder;

    #[test]
    fn tags_from_path() {
        let t: Vec<String> = path_tags("src/dpl/Opendp.cpp").into_iter().collect();
        assert_eq!(t, ["dpl", "opendp", "src"]);
    }

    #[test]
    fn literature_sidecar_tags() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("eplace.txt"), "electrostatic density placement").unwrap();
        std::fs::write(dir.path().join("eplace.tags"), "gp, Placement").unwrap();
        std::fs::write(dir.path().join("sta.md"), "static timing").unwrap();
        std::fs::write(dir.path().join("sta.md.tags"), "sta").unwrap();
        let docs = ingest_literature(dir.path(), &HashingEmbedder::default()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].domain_tags, ["gp".to_string(), "placement".to_string()].into());
        assert_eq!(docs[1].domain_tags, ["sta".to_string()].into());
        assert!(docs.iter().all(|d| d.source == DocSource::Literature && d.subject.is_none()));
    }
}
