use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::{tokenize, RetrievalError};
use crate::process::call_json;

pub const DEFAULT_DIM: usize = 256;

/// Maps text to a unit vector, or the zero vector when the text has nothing
/// to embed.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Token-hashing embedder: each token's FNV-1a hash picks a bucket, bucket
/// counts are L2-normalized.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: DEFAULT_DIM }
    }
}

impl HashingEmbedder {
    pub fn bucket(&self, token: &str) -> usize {
        let mut h = FnvHasher::default();
        h.write(token.as_bytes());
        (h.finish() % self.dim as u64) as usize
    }
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut v = vec![0.0; self.dim];
        for t in tokenize(text) {
            v[self.bucket(&t)] += 1.0;
        }
        Ok(normalize(v))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    task: &'static str,
    text: &'a str,
    dim: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

/// External embedder speaking the JSON-over-stdio plugin contract.
#[derive(Clone, Debug)]
pub struct ProcessEmbedder {
    pub cmd: String,
    pub dim: usize,
}

impl Embedder for ProcessEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let resp: EmbedResponse = call_json(&self.cmd, &EmbedRequest { task: "embed", text, dim: self.dim })
            .map_err(|e| RetrievalError::EmbedderUnavailable(e.to_string()))?;
        if resp.embedding.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: resp.embedding.len() });
        }
        if resp.embedding.iter().any(|x| !x.is_finite()) {
            return Err(RetrievalError::EmbedderUnavailable("non-finite embedding".into()));
        }
        Ok(normalize(resp.embedding))
    }
}

pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

/// Cosine of two unit-or-zero vectors; `None` when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    if is_zero(a) || is_zero(b) {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_embedder_counts_buckets() {
        let e = HashingEmbedder { dim: 8 };
        let v = e.embed("a a b").unwrap();
        let (ba, bb) = (e.bucket("a"), e.bucket("b"));
        let mut expect = vec![0.0; 8];
        expect[ba] += 2.0;
        expect[bb] += 1.0;
        assert_eq!(v, normalize(expect));
        let nonzero = v.iter().filter(|x| **x != 0.0).count();
        assert_eq!(nonzero, if ba == bb { 1 } else { 2 });
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fnv_bucket_matches_reference() {
        // FNV-1a 64 of "a" is 0xaf63dc4c8601ec8c.
        let e = HashingEmbedder { dim: 256 };
        assert_eq!(e.bucket("a"), 0x8c);
    }

    #[test]
    fn empty_text_is_zero_vector() {
        let v = HashingEmbedder::default().embed("  ;; ").unwrap();
        assert_eq!(v.len(), DEFAULT_DIM);
        assert!(is_zero(&v));
        assert_eq!(cosine(&v, &v), None);
    }

    #[test]
    fn deterministic() {
        let e = HashingEmbedder::default();
        assert_eq!(e.embed("global placement").unwrap(), e.embed("global placement").unwrap());
    }

    #[test]
    fn process_embedder_failure_is_unavailable() {
        let e = ProcessEmbedder { cmd: "exit 3".into(), dim: 4 };
        assert!(matches!(e.embed("x"), Err(RetrievalError::EmbedderUnavailable(_))));
        let e = ProcessEmbedder { cmd: "echo '{\"embedding\": [3.0, 4.0]}'".into(), dim: 2 };
        assert_eq!(e.embed("x").unwrap(), vec![0.6, 0.8]);
        let e = ProcessEmbedder { cmd: "echo '{\"embedding\": [1.0]}'".into(), dim: 2 };
        assert!(matches!(e.embed("x"), Err(RetrievalError::DimensionMismatch { .. })));
    }
}
