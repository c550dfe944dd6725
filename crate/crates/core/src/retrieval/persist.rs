use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, DocSource, IndexConfig, IndexedDoc, RetrievalError, SearchIndex};
use crate::hash::{canonical_json, json_error_offset, sha256_hex};

const FORMAT: u32 = 1;
const SOURCES: [DocSource; 3] = [DocSource::Card, DocSource::Snippet, DocSource::Literature];

#[derive(Serialize, Deserialize)]
struct Segment {
    file: String,
    docs: usize,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    config: IndexConfig,
    segments: Vec<Segment>,
}

fn segment_file(source: DocSource) -> String {
    format!("{}.json", source.as_str())
}

fn io(path: &Path, source: std::io::Error) -> RetrievalError {
    RetrievalError::Io { path: path.display().to_string(), source }
}

fn malformed(offset: usize, reason: impl Into<String>) -> RetrievalError {
    RetrievalError::MalformedIndex { offset, reason: reason.into() }
}

/// Writes one canonical JSON segment per document source plus `manifest.json`.
pub fn save_index(index: &SearchIndex, dir: &Path) -> Result<(), RetrievalError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut segments = Vec::new();
    for source in SOURCES {
        let docs: Vec<&IndexedDoc> = index.docs().filter(|d| d.source == source).collect();
        let bytes = canonical_json(&docs);
        let file = segment_file(source);
        let path = dir.join(&file);
        std::fs::write(&path, &bytes).map_err(|e| io(&path, e))?;
        segments.push(Segment { file, docs: docs.len(), sha256: sha256_hex(&bytes) });
    }
    let manifest = Manifest { format: FORMAT, config: *index.config(), segments };
    let path = dir.join("manifest.json");
    std::fs::write(&path, canonical_json(&manifest)).map_err(|e| io(&path, e))
}

pub fn load_index(dir: &Path) -> Result<SearchIndex, RetrievalError> {
    let path = dir.join("manifest.json");
    let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|e| malformed(json_error_offset(&bytes, &e), e.to_string()))?;
    if manifest.format != FORMAT {
        return Err(malformed(0, format!("unsupported format {}", manifest.format)));
    }
    let mut docs = Vec::new();
    for seg in &manifest.segments {
        let path = dir.join(&seg.file);
        let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
        if sha256_hex(&bytes) != seg.sha256 {
            return Err(malformed(0, format!("{} checksum mismatch", seg.file)));
        }
        let part: Vec<IndexedDoc> =
            serde_json::from_slice(&bytes).map_err(|e| malformed(json_error_offset(&bytes, &e), e.to_string()))?;
        if part.len() != seg.docs {
            return Err(malformed(0, format!("{} holds {} docs, manifest says {}", seg.file, part.len(), seg.docs)));
        }
        if let Some(d) = part.iter().find(|d| d.tokens != tokenize(&d.text)) {
            return Err(malformed(0, format!("tokens of {} do not match its text", d.doc_id)));
        }
        docs.extend(part);
    }
    SearchIndex::build(manifest.config, docs)
}
