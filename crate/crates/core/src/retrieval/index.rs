use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::embed::cosine;
use super::text::{bm25_score, tokenize, Bm25Params, CorpusStats};
use super::{Embedder, RetrievalError};
use crate::codegraph::{CodeGraph, NodeId};
use crate::hash::FieldHasher;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DocSource {
    Card,
    Snippet,
    Literature,
}

impl DocSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DocSource::Card => "card",
            DocSource::Snippet => "snippet",
            DocSource::Literature => "literature",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedDoc {
    pub doc_id: String,
    pub source: DocSource,
    pub subject: Option<NodeId>,
    pub text: String,
    pub tokens: Vec<String>,
    pub embedding: Vec<f64>,
    pub domain_tags: BTreeSet<String>,
}

impl IndexedDoc {
    /// Builds a document whose id is derived from `source` and `key`, so a
    /// later document with the same key replaces it on upsert.
    pub fn new(
        source: DocSource,
        key: &str,
        subject: Option<NodeId>,
        text: &str,
        domain_tags: BTreeSet<String>,
        embedder: &dyn Embedder,
    ) -> Result<Self, RetrievalError> {
        Ok(IndexedDoc {
            doc_id: doc_id(source, key),
            source,
            subject,
            text: text.to_string(),
            tokens: tokenize(text),
            embedding: embedder.embed(text)?,
            domain_tags,
        })
    }
}

pub fn doc_id(source: DocSource, key: &str) -> String {
    FieldHasher::new().field(source.as_str()).field(key).finish_hex()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub dim: usize,
    pub bm25: Bm25Params,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Hop count at which the structural part reaches zero.
    pub hop_cap: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            dim: super::DEFAULT_DIM,
            bm25: Bm25Params::default(),
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            hop_cap: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParts {
    pub sparse: f64,
    pub dense: f64,
    pub structural: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub doc_id: String,
    pub score: f64,
    pub parts: ScoreParts,
}

/// Undirected adjacency of a condensed graph, with SCC members mapped to
/// their group node.
#[derive(Clone, Debug, Default)]
pub struct Structure {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
    group_of: BTreeMap<NodeId, NodeId>,
}

impl Structure {
    pub fn from_graph(graph: &CodeGraph) -> Self {
        let mut s = Structure::default();
        for n in graph.nodes() {
            s.adj.entry(n.id).or_default();
            for m in &n.members {
                s.group_of.insert(*m, n.id);
            }
        }
        for e in graph.edges() {
            if e.src != e.dst {
                s.adj.entry(e.src).or_default().insert(e.dst);
                s.adj.entry(e.dst).or_default().insert(e.src);
            }
        }
        s
    }

    fn canonical(&self, id: NodeId) -> NodeId {
        self.group_of.get(&id).copied().unwrap_or(id)
    }

    /// Hop distances from `focus`, up to `cap`.
    pub fn hops_from(&self, focus: NodeId, cap: usize) -> BTreeMap<NodeId, usize> {
        let start = self.canonical(focus);
        let mut dist = BTreeMap::new();
        if !self.adj.contains_key(&start) {
            return dist;
        }
        dist.insert(start, 0);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == cap {
                continue;
            }
            for v in &self.adj[&u] {
                if !dist.contains_key(v) {
                    dist.insert(*v, d + 1);
                    queue.push_back(*v);
                }
            }
        }
        dist
    }
}

/// Hybrid sparse + dense + structural index.
///
/// Cloning is cheap for the structure and yields an independent snapshot of
/// the documents.
#[derive(Clone, Debug)]
pub struct SearchIndex {
    config: IndexConfig,
    docs: BTreeMap<String, IndexedDoc>,
    stats: CorpusStats,
    structure: Option<Arc<Structure>>,
}

impl SearchIndex {
    pub fn new(config: IndexConfig) -> Self {
        SearchIndex { config, docs: BTreeMap::new(), stats: CorpusStats::default(), structure: None }
    }

    pub fn build(config: IndexConfig, docs: Vec<IndexedDoc>) -> Result<Self, RetrievalError> {
        let mut index = SearchIndex::new(config);
        index.update(docs, &[])?;
        Ok(index)
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, id: &str) -> Option<&IndexedDoc> {
        self.docs.get(id)
    }

    pub fn docs(&self) -> impl Iterator<Item = &IndexedDoc> {
        self.docs.values()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn attach_graph(&mut self, graph: &CodeGraph) {
        self.structure = Some(Arc::new(Structure::from_graph(graph)));
    }

    /// Applies `deletes` then `upserts`. Nothing changes when any delete
    /// names an unknown id or any upsert has the wrong dimension.
    pub fn update(&mut self, upserts: Vec<IndexedDoc>, deletes: &[String]) -> Result<(), RetrievalError> {
        if let Some(id) = deletes.iter().find(|id| !self.docs.contains_key(*id)) {
            return Err(RetrievalError::UnknownDocId(id.clone()));
        }
        if let Some(d) = upserts.iter().find(|d| d.embedding.len() != self.config.dim) {
            return Err(RetrievalError::DimensionMismatch { expected: self.config.dim, got: d.embedding.len() });
        }
        for id in deletes {
            if let Some(old) = self.docs.remove(id) {
                self.stats.remove(&old.tokens);
            }
        }
        for doc in upserts {
            if let Some(old) = self.docs.remove(&doc.doc_id) {
                self.stats.remove(&old.tokens);
            }
            self.stats.add(&doc.tokens);
            self.docs.insert(doc.doc_id.clone(), doc);
        }
        Ok(())
    }

    /// Top-`k` hits for `query`.
    ///
    /// A document is a hit when its BM25 score or its cosine to the query is
    /// positive, and it carries every tag of `tag_filter`.
    pub fn search(
        &self,
        query: &str,
        k: usize,
        tag_filter: Option<&BTreeSet<String>>,
        focus: Option<NodeId>,
        embedder: &dyn Embedder,
    ) -> Result<Vec<ScoredHit>, RetrievalError> {
        let qvec = embedder.embed(query)?;
        self.search_with(&tokenize(query), &qvec, k, tag_filter, focus)
    }

    pub fn search_with(
        &self,
        qtokens: &[String],
        qvec: &[f64],
        k: usize,
        tag_filter: Option<&BTreeSet<String>>,
        focus: Option<NodeId>,
    ) -> Result<Vec<ScoredHit>, RetrievalError> {
        if self.docs.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        if qvec.len() != self.config.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.config.dim, got: qvec.len() });
        }
        let hops = match (focus, &self.structure) {
            (Some(f), Some(s)) => Some((s, s.hops_from(f, self.config.hop_cap))),
            _ => None,
        };
        let mut raw: Vec<(&IndexedDoc, f64, Option<f64>)> = self
            .docs
            .values()
            .filter(|d| tag_filter.is_none_or(|f| f.is_subset(&d.domain_tags)))
            .map(|d| {
                let sparse = bm25_score(qtokens, &d.tokens, &self.stats, self.config.bm25);
                (d, sparse, cosine(qvec, &d.embedding))
            })
            .filter(|(_, s, c)| *s > 0.0 || c.is_some_and(|c| c > 0.0))
            .collect();
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        let lo = raw.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let cap = self.config.hop_cap.max(1) as f64;
        let mut hits: Vec<ScoredHit> = raw
            .drain(..)
            .map(|(d, s, c)| {
                let sparse = if hi > lo {
                    (s - lo) / (hi - lo)
                } else if hi > 0.0 {
                    1.0
                } else {
                    0.0
                };
                let dense = c.map_or(0.0, |c| (1.0 + c) / 2.0);
                let structural = match (&hops, d.subject) {
                    (Some((s, dist)), Some(subj)) => {
                        dist.get(&s.canonical(subj)).map_or(0.0, |h| (1.0 - *h as f64 / cap).max(0.0))
                    }
                    _ => 0.0,
                };
                let parts = ScoreParts { sparse, dense, structural };
                ScoredHit { doc_id: d.doc_id.clone(), score: self.combine(parts), parts }
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        hits.truncate(k);
        Ok(hits)
    }

    pub fn combine(&self, p: ScoreParts) -> f64 {
        self.config.alpha * p.sparse + self.config.beta * p.dense + self.config.gamma * p.structural
    }
}

/// Functional form of [`SearchIndex::update`].
pub fn update_index(
    mut index: SearchIndex,
    upserts: Vec<IndexedDoc>,
    deletes: &[String],
) -> Result<SearchIndex, RetrievalError> {
    index.update(upserts, deletes)?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::{EdgeKind, GraphEdge, GraphNode, Language, NodeKind, Span};
    use crate::retrieval::HashingEmbedder;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc(key: &str, text: &str, tags: &[&str], subject: Option<NodeId>) -> IndexedDoc {
        let tags = tags.iter().map(|t| t.to_string()).collect();
        IndexedDoc::new(DocSource::Card, key, subject, text, tags, &HashingEmbedder::default()).unwrap()
    }

    fn search(ix: &SearchIndex, q: &str, k: usize) -> Vec<ScoredHit> {
        ix.search(q, k, None, None, &HashingEmbedder::default()).unwrap()
    }

    #[test]
    fn unique_token_ranks_first() {
        let ix = SearchIndex::build(
            IndexConfig::default(),
            vec![
                doc("a", "global placement density", &[], None),
                doc("b", "detailed placement displacement", &[], None),
                doc("c", "timing repair buffer", &[], None),
            ],
        )
        .unwrap();
        let hits = search(&ix, "displacement", 3);
        assert_eq!(hits[0].doc_id, doc_id(DocSource::Card, "b"));
        for h in &hits {
            let want = 0.5 * h.parts.sparse + 0.3 * h.parts.dense + 0.2 * h.parts.structural;
            assert!((h.score - want).abs() < 1e-9);
        }
    }

    fn chain_graph() -> (CodeGraph, Vec<NodeId>) {
        let nodes: Vec<GraphNode> = (0..4)
            .map(|i| {
                GraphNode::new(
                    NodeKind::Definition,
                    Language::Cpp,
                    "a.cc",
                    Span::new(i * 10, i * 10 + 5),
                    &format!("f{i}"),
                    None,
                )
            })
            .collect();
        let ids: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
        let edges: Vec<GraphEdge> = ids.windows(2).map(|w| GraphEdge::new(w[0], w[1], EdgeKind::Calls)).collect();
        (CodeGraph::from_parts("fp", nodes, edges, true).unwrap(), ids)
    }

    #[test]
    fn structural_boost_breaks_lexical_tie() {
        let (graph, ids) = chain_graph();
        let mut ix = SearchIndex::build(
            IndexConfig::default(),
            vec![doc("near", "cost model", &[], Some(ids[1])), doc("far", "cost model", &[], Some(ids[3]))],
        )
        .unwrap();
        ix.attach_graph(&graph);
        let e = HashingEmbedder::default();
        let plain = ix.search("cost model", 2, None, None, &e).unwrap();
        assert_eq!(plain[0].score, plain[1].score);
        let focused = ix.search("cost model", 2, None, Some(ids[0]), &e).unwrap();
        assert_eq!(focused[0].doc_id, doc_id(DocSource::Card, "near"));
        assert!((focused[0].parts.structural - 0.75).abs() < 1e-12);
        assert!((focused[1].parts.structural - 0.25).abs() < 1e-12);
        assert!(focused[0].score > focused[1].score);
    }

    #[test]
    fn tag_filter_excluding_everything_is_empty() {
        let ix = SearchIndex::build(IndexConfig::default(), vec![doc("a", "slack", &["sta"], None)]).unwrap();
        let filter: BTreeSet<String> = ["gp".to_string()].into();
        let hits = ix.search("slack", 5, Some(&filter), None, &HashingEmbedder::default()).unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn empty_index_errors() {
        let ix = SearchIndex::new(IndexConfig::default());
        assert!(matches!(ix.search("x", 1, None, None, &HashingEmbedder::default()), Err(RetrievalError::EmptyIndex)));
    }

    #[test]
    fn upsert_and_delete() {
        let mut ix = SearchIndex::new(IndexConfig::default());
        ix.update(vec![doc("a", "overflow", &[], None)], &[]).unwrap();
        assert_eq!(search(&ix, "overflow", 1)[0].doc_id, doc_id(DocSource::Card, "a"));
        ix.update(vec![doc("b", "zzz", &[], None)], &[doc_id(DocSource::Card, "a")]).unwrap();
        assert!(search(&ix, "overflow", 1).is_empty());
        assert!(matches!(ix.update(vec![], &["nope".to_string()]), Err(RetrievalError::UnknownDocId(_))));
        assert_eq!(ix.len(), 1);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let mut ix = SearchIndex::new(IndexConfig { dim: 8, ..Default::default() });
        assert!(matches!(
            ix.update(vec![doc("a", "x", &[], None)], &[]),
            Err(RetrievalError::DimensionMismatch { expected: 8, got: 256 })
        ));
    }

    const VOCAB: &[&str] = &["place", "route", "wire", "slack", "buffer", "density", "cell", "net", "clock", "via"];

    fn random_doc(rng: &mut ChaCha8Rng, key: usize) -> IndexedDoc {
        let n = rng.gen_range(1..8);
        let text: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
        let tags: Vec<&str> = ["gp", "sta"].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        doc(&format!("d{key}"), &text.join(" "), &tags, None)
    }

    /// Incremental updates against a fresh build of the final document set.
    fn rebuild_trial(seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<IndexedDoc> = (0..50).map(|i| random_doc(&mut rng, i)).collect();
        let mut live: BTreeMap<String, IndexedDoc> = docs.iter().map(|d| (d.doc_id.clone(), d.clone())).collect();
        let mut ix = SearchIndex::build(IndexConfig::default(), docs).unwrap();
        let mut next = 50;
        for _ in 0..10 {
            let ids: Vec<String> = live.keys().cloned().collect();
            let n_del = rng.gen_range(0..3);
            let deletes: Vec<String> = ids.choose_multiple(&mut rng, n_del).cloned().collect();
            let mut upserts = Vec::new();
            for _ in 0..rng.gen_range(0..3) {
                upserts.push(random_doc(&mut rng, next));
                next += 1;
            }
            if rng.gen_bool(0.5) {
                if let Some(id) = ids.iter().find(|id| !deletes.contains(id)) {
                    let mut d = random_doc(&mut rng, 0);
                    d.doc_id = id.clone();
                    upserts.push(d);
                }
            }
            for id in &deletes {
                live.remove(id);
            }
            for d in &upserts {
                live.insert(d.doc_id.clone(), d.clone());
            }
            ix.update(upserts, &deletes).unwrap();
        }
        let fresh = SearchIndex::build(IndexConfig::default(), live.into_values().collect()).unwrap();
        VOCAB.iter().all(|q| search(&ix, q, 10) == search(&fresh, q, 10))
    }

    #[test]
    fn incremental_equals_rebuild() {
        for seed in 0..100 {
            assert!(rebuild_trial(seed), "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn insertion_order_irrelevant(seed in 0u64..1000, shuffle in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let docs: Vec<IndexedDoc> = (0..20).map(|i| random_doc(&mut rng, i)).collect();
            let mut shuffled = docs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
            let a = SearchIndex::build(IndexConfig::default(), docs).unwrap();
            let mut b = SearchIndex::new(IndexConfig::default());
            for d in shuffled {
                b.update(vec![d], &[]).unwrap();
            }
            for q in VOCAB {
                prop_assert_eq!(search(&a, q, 10), search(&b, q, 10));
            }
        }

        #[test]
        fn more_tags_never_add_hits(seed in 0u64..1000, q in 0usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let docs: Vec<IndexedDoc> = (0..20).map(|i| random_doc(&mut rng, i)).collect();
            let ix = SearchIndex::build(IndexConfig::default(), docs).unwrap();
            let e = HashingEmbedder::default();
            let one: BTreeSet<String> = ["gp".to_string()].into();
            let two: BTreeSet<String> = ["gp".to_string(), "sta".to_string()].into();
            let ids = |f: Option<&BTreeSet<String>>| -> BTreeSet<String> {
                ix.search(VOCAB[q], 100, f, None, &e).unwrap().into_iter().map(|h| h.doc_id).collect()
            };
            let (none, a, b) = (ids(None), ids(Some(&one)), ids(Some(&two)));
            prop_assert!(a.is_subset(&none));
            prop_assert!(b.is_subset(&a));
        }

        #[test]
        fn scores_decompose(seed in 0u64..1000, q in 0usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let docs: Vec<IndexedDoc> = (0..20).map(|i| random_doc(&mut rng, i)).collect();
            let ix = SearchIndex::build(IndexConfig::default(), docs).unwrap();
            for h in search(&ix, VOCAB[q], 20) {
                let want = 0.5 * h.parts.sparse + 0.3 * h.parts.dense + 0.2 * h.parts.structural;
                prop_assert!((h.score - want).abs() < 1e-9);
            }
        }
    }
}
