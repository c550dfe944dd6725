//! Flow-result cache keyed by run configuration and workspace content.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::ExecError;
use crate::flowsim::{render_qor_json, FlowRunConfig, QoRReport};
use crate::hash::{canonical_json, sha256_hex, FieldHasher};

/// Same config and same workspace fingerprint give the same key.
pub fn cache_key(config: &FlowRunConfig, workspace_fingerprint: &str) -> String {
    let mut h = FieldHasher::new();
    h.field(canonical_json(config)).field(workspace_fingerprint);
    h.finish_hex()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub report: QoRReport,
    pub artifacts: Vec<String>,
    /// SHA-256 of the canonical report JSON.
    pub checksum: String,
}

impl CacheEntry {
    pub fn new(key: &str, report: QoRReport, artifacts: Vec<String>) -> Self {
        let checksum = sha256_hex(render_qor_json(&report));
        CacheEntry { key: key.to_string(), report, artifacts, checksum }
    }

    fn verify(&self, key: &str) -> bool {
        self.key == key && self.checksum == sha256_hex(render_qor_json(&self.report))
    }
}

/// In-memory cache, optionally backed by one JSON file per entry.
#[derive(Debug, Default)]
pub struct FlowCache {
    dir: Option<PathBuf>,
    memory: BTreeMap<String, CacheEntry>,
    pub hits: usize,
    pub misses: usize,
}

impl FlowCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: &Path) -> Result<Self, ExecError> {
        std::fs::create_dir_all(dir).map_err(|source| ExecError::Io { path: dir.display().to_string(), source })?;
        Ok(FlowCache { dir: Some(dir.to_path_buf()), ..Self::default() })
    }

    fn entry_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// Returns a verified entry. Corrupt entries count as misses and are
    /// dropped.
    pub fn lookup(&mut self, key: &str) -> Option<CacheEntry> {
        let found = match self.entry_path(key) {
            Some(path) => match std::fs::read(&path) {
                Ok(bytes) => match serde_json::from_slice::<CacheEntry>(&bytes) {
                    Ok(e) if e.verify(key) => Some(e),
                    _ => {
                        warn!(key, "corrupt cache entry treated as a miss");
                        let _ = std::fs::remove_file(&path);
                        None
                    }
                },
                Err(_) => None,
            },
            None => self.memory.get(key).filter(|e| e.verify(key)).cloned(),
        };
        if found.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        found
    }

    pub fn store(&mut self, entry: CacheEntry) -> Result<(), ExecError> {
        if let Some(path) = self.entry_path(&entry.key) {
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, canonical_json(&entry))
                .map_err(|source| ExecError::Io { path: tmp.display().to_string(), source })?;
            std::fs::rename(&tmp, &path)
                .map_err(|source| ExecError::Io { path: path.display().to_string(), source })?;
        } else {
            self.memory.insert(entry.key.clone(), entry);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowsim::{Pdk, Stage};

    fn config() -> FlowRunConfig {
        FlowRunConfig::new("aes", Pdk::Nangate45, Stage::GlobalRoute).with_param("CORE_UTIL", "85")
    }

    fn report() -> QoRReport {
        let mut r = QoRReport::new("aes", "Nangate45", Stage::GlobalRoute);
        r.routed_wirelength_um = Some(230044.0);
        r
    }

    #[test]
    fn key_sensitivity() {
        let k = cache_key(&config(), "abc");
        assert_eq!(k, cache_key(&config(), "abc"));
        assert_ne!(k, cache_key(&config(), "abd"));
        assert_ne!(k, cache_key(&config().with_param("CORE_UTIL", "80"), "abc"));
    }

    #[test]
    fn memory_hit() {
        let mut c = FlowCache::in_memory();
        let k = cache_key(&config(), "t");
        assert!(c.lookup(&k).is_none());
        c.store(CacheEntry::new(&k, report(), vec![])).unwrap();
        assert_eq!(c.lookup(&k).unwrap().report, report());
        assert_eq!((c.hits, c.misses), (1, 1));
    }

    #[test]
    fn bit_flip_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = FlowCache::on_disk(dir.path()).unwrap();
        let k = cache_key(&config(), "t");
        c.store(CacheEntry::new(&k, report(), vec!["5_route.def".into()])).unwrap();
        let path = dir.path().join(format!("{k}.json"));
        let text = std::fs::read_to_string(&path).unwrap().replace("230044.0", "230045.0");
        std::fs::write(&path, text).unwrap();
        assert!(c.lookup(&k).is_none());
        assert!(!path.exists());
        c.store(CacheEntry::new(&k, report(), vec![])).unwrap();
        assert!(c.lookup(&k).is_some());
    }
}
