use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Objective, PlanError};
use crate::codegraph::NodeId;
use crate::retrieval::{cosine, tokenize, DocSource, Embedder, RetrievalError, SearchIndex};

/// One retrieved document handed to plan synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub doc_id: String,
    pub source: DocSource,
    pub subject: Option<NodeId>,
    pub text: String,
    pub tags: BTreeSet<String>,
    pub relevance: f64,
}

/// Input to [`mmr_select`].
#[derive(Clone, Debug)]
pub struct MmrCandidate {
    pub doc_id: String,
    pub relevance: f64,
    pub embedding: Vec<f64>,
    /// Corpus the candidate came from; selection keeps one of each when it
    /// can.
    pub corpus: usize,
}

pub fn mmr_value(cands: &[MmrCandidate], picked: &[usize], i: usize, lambda: f64) -> f64 {
    let redundancy =
        picked.iter().map(|&j| cosine(&cands[i].embedding, &cands[j].embedding).unwrap_or(0.0)).fold(0.0f64, f64::max);
    lambda * cands[i].relevance - (1.0 - lambda) * redundancy
}

/// Greedy maximal-marginal-relevance selection of up to `k` indices.
///
/// Ties go to the smaller doc id. When the slots left equal the number of
/// corpora not yet represented, only those corpora are eligible.
pub fn mmr_select(cands: &[MmrCandidate], k: usize, lambda: f64) -> Vec<usize> {
    let corpora: BTreeSet<usize> = cands.iter().map(|c| c.corpus).collect();
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k.min(cands.len()) {
        let have: BTreeSet<usize> = picked.iter().map(|&i| cands[i].corpus).collect();
        let missing: BTreeSet<usize> = corpora.difference(&have).copied().collect();
        let forced = !missing.is_empty() && k - picked.len() <= missing.len();
        let best = (0..cands.len())
            .filter(|i| !picked.contains(i))
            .filter(|i| !forced || missing.contains(&cands[*i].corpus))
            .map(|i| (i, mmr_value(cands, &picked, i, lambda)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| cands[b.0].doc_id.cmp(&cands[a.0].doc_id)));
        match best {
            Some((i, _)) => picked.push(i),
            None => break,
        }
    }
    picked
}

/// Merges candidates from the repository and literature indexes and
/// re-ranks them for diversity. Repository hits outside the objective's
/// scope tags are dropped.
pub fn retrieve_context(
    objective: &Objective,
    repo: &SearchIndex,
    lit: &SearchIndex,
    k: usize,
    lambda: f64,
    embedder: &dyn Embedder,
) -> Result<Vec<Evidence>, PlanError> {
    objective.check()?;
    if repo.is_empty() || lit.is_empty() {
        return Err(PlanError::EmptyIndex);
    }
    let query = objective.query();
    let qtokens = tokenize(&query);
    let qvec = embedder.embed(&query).map_err(PlanError::Retrieval)?;
    let scope: BTreeSet<String> = objective.scope.iter().map(|s| s.to_ascii_lowercase()).collect();
    let mut pool = Vec::new();
    for (corpus, index) in [repo, lit].into_iter().enumerate() {
        let hits = match index.search_with(&qtokens, &qvec, index.len(), None, None) {
            Ok(h) => h,
            Err(RetrievalError::EmptyIndex) => Vec::new(),
            Err(e) => return Err(PlanError::Retrieval(e)),
        };
        let hits = hits.into_iter().filter_map(|h| index.doc(&h.doc_id).map(|d| (h, d)));
        let mut taken = 0;
        for (hit, doc) in hits {
            if corpus == 0 && doc.domain_tags.is_disjoint(&scope) {
                continue;
            }
            if taken == 3 * k.max(1) {
                break;
            }
            taken += 1;
            pool.push((
                MmrCandidate {
                    doc_id: doc.doc_id.clone(),
                    relevance: hit.score,
                    embedding: doc.embedding.clone(),
                    corpus,
                },
                Evidence {
                    doc_id: doc.doc_id.clone(),
                    source: doc.source,
                    subject: doc.subject,
                    text: doc.text.clone(),
                    tags: doc.domain_tags.clone(),
                    relevance: hit.score,
                },
            ));
        }
    }
    pool.sort_by(|a, b| a.0.doc_id.cmp(&b.0.doc_id));
    pool.dedup_by(|a, b| a.0.doc_id == b.0.doc_id);
    let cands: Vec<MmrCandidate> = pool.iter().map(|p| p.0.clone()).collect();
    Ok(mmr_select(&cands, k, lambda).into_iter().map(|i| pool[i].1.clone()).collect())
}
