use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Lowercased maximal alphanumeric runs of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Document frequencies and length statistics of a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub total_len: usize,
    pub df: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut stats = CorpusStats::default();
        for tokens in docs {
            stats.add(tokens);
        }
        stats
    }

    pub fn add(&mut self, tokens: &[String]) {
        self.n_docs += 1;
        self.total_len += tokens.len();
        for t in tokens.iter().collect::<BTreeSet<_>>() {
            *self.df.entry(t.clone()).or_default() += 1;
        }
    }

    pub fn remove(&mut self, tokens: &[String]) {
        self.n_docs -= 1;
        self.total_len -= tokens.len();
        for t in tokens.iter().collect::<BTreeSet<_>>() {
            let n = self.df.get_mut(t).expect("token was counted");
            *n -= 1;
            if *n == 0 {
                self.df.remove(t);
            }
        }
    }

    pub fn avg_len(&self) -> f64 {
        if self.n_docs == 0 {
            0.0
        } else {
            self.total_len as f64 / self.n_docs as f64
        }
    }

    /// Nonnegative idf, `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0) as f64;
        let n = self.n_docs as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

/// BM25 parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// BM25 of `doc` for the distinct tokens of `query`.
pub fn bm25_score(query: &[String], doc: &[String], stats: &CorpusStats, params: Bm25Params) -> f64 {
    if doc.is_empty() || stats.n_docs == 0 {
        return 0.0;
    }
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    for t in doc {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    let norm = 1.0 - params.b + params.b * doc.len() as f64 / stats.avg_len();
    query
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter_map(|q| tf.get(q).map(|&f| (q, f as f64)))
        .map(|(q, f)| stats.idf(q) * f * (params.k1 + 1.0) / (f + params.k1 * norm))
        .sum()
}
