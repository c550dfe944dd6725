//! Hybrid sparse, dense and structural search over cards, code snippets and
//! literature.

mod corpus;
mod embed;
mod index;
mod persist;
mod text;

pub use corpus::{ingest_literature, path_tags, repo_corpus};
pub use embed::{cosine, normalize, Embedder, HashingEmbedder, ProcessEmbedder, DEFAULT_DIM};
pub use index::{
    doc_id, update_index, DocSource, IndexConfig, IndexedDoc, ScoreParts, ScoredHit, SearchIndex, Structure,
};
pub use persist::{load_index, save_index};
pub use text::{bm25_score, tokenize, Bm25Params, CorpusStats};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("index holds no documents")]
    EmptyIndex,
    #[error("unknown doc id {0}")]
    UnknownDocId(String),
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("embedding has dimension {got}, index expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed index at byte {offset}: {reason}")]
    MalformedIndex { offset: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
