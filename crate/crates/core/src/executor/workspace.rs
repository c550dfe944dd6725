//! Content-addressed snapshots of a working tree.

use std::collections::{BTreeMap, HashMap};
use std::path::{Component, Path, PathBuf};

use super::patch::{apply_file_patch, split_patch, Anchor};
use super::ExecError;
use crate::hash::{sha256_hex, FieldHasher};
use crate::localizer::GranularStep;

pub type CheckpointId = usize;

#[derive(Clone, Debug)]
struct Snapshot {
    files: BTreeMap<String, String>,
    hash: String,
    committed: bool,
}

/// A directory whose tracked files (everything outside hidden entries) can
/// be snapshotted and restored byte-for-byte.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    blobs: HashMap<String, Vec<u8>>,
    checkpoints: Vec<Snapshot>,
}

fn io_err(path: &Path, source: std::io::Error) -> ExecError {
    ExecError::Io { path: path.display().to_string(), source }
}

fn tree_hash_of(files: &BTreeMap<String, String>) -> String {
    let mut h = FieldHasher::new();
    for (path, blob) in files {
        h.field(path).field(blob);
    }
    h.finish_hex()
}

impl Workspace {
    /// Opens `root` and records its current contents as the first committed
    /// checkpoint.
    pub fn open(root: &Path) -> Result<Self, ExecError> {
        let mut ws = Workspace { root: root.to_path_buf(), blobs: HashMap::new(), checkpoints: Vec::new() };
        ws.commit()?;
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn tracked(&self) -> Result<Vec<(String, PathBuf)>, ExecError> {
        let mut out = Vec::new();
        let walker = walkdir::WalkDir::new(&self.root)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
        for entry in walker {
            let entry = entry.map_err(|e| {
                let path = e.path().map(Path::to_path_buf).unwrap_or_default();
                io_err(&path, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")))
            })?;
            if entry.file_type().is_file() {
                let rel = entry
                    .path()
                    .strip_prefix(&self.root)
                    .unwrap_or(entry.path())
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                out.push((rel, entry.path().to_path_buf()));
            }
        }
        out.sort();
        Ok(out)
    }

    fn scan(&mut self, store: bool) -> Result<BTreeMap<String, String>, ExecError> {
        let mut files = BTreeMap::new();
        for (rel, full) in self.tracked()? {
            let bytes = std::fs::read(&full).map_err(|e| io_err(&full, e))?;
            let blob = sha256_hex(&bytes);
            if store {
                self.blobs.entry(blob.clone()).or_insert(bytes);
            }
            files.insert(rel, blob);
        }
        Ok(files)
    }

    /// Hash of the tracked files as they are on disk now.
    pub fn tree_hash(&mut self) -> Result<String, ExecError> {
        Ok(tree_hash_of(&self.scan(false)?))
    }

    fn snapshot(&mut self, committed: bool) -> Result<CheckpointId, ExecError> {
        let files = self.scan(true)?;
        let hash = tree_hash_of(&files);
        self.checkpoints.push(Snapshot { files, hash, committed });
        Ok(self.checkpoints.len() - 1)
    }

    /// Records the current tree as a restorable, uncommitted checkpoint.
    pub fn checkpoint(&mut self) -> Result<CheckpointId, ExecError> {
        self.snapshot(false)
    }

    /// Records the current tree as a committed checkpoint.
    pub fn commit(&mut self) -> Result<CheckpointId, ExecError> {
        self.snapshot(true)
    }

    /// Latest committed checkpoint.
    pub fn head(&self) -> CheckpointId {
        self.checkpoints.iter().rposition(|c| c.committed).expect("workspace always has a committed checkpoint")
    }

    pub fn checkpoint_hash(&self, id: CheckpointId) -> Option<&str> {
        self.checkpoints.get(id).map(|c| c.hash.as_str())
    }

    pub fn committed_hashes(&self) -> Vec<String> {
        self.checkpoints.iter().filter(|c| c.committed).map(|c| c.hash.clone()).collect()
    }

    /// True when the tree matches the most recent checkpoint.
    pub fn is_clean(&mut self) -> Result<bool, ExecError> {
        let last = self.checkpoints.last().expect("at least one checkpoint").hash.clone();
        Ok(self.tree_hash()? == last)
    }

    /// Restores the tracked tree of checkpoint `to`: differing files are
    /// rewritten and files it did not have are deleted.
    pub fn rollback(&mut self, to: CheckpointId) -> Result<(), ExecError> {
        let target = self.checkpoints.get(to).ok_or(ExecError::UnknownCheckpoint(to))?.files.clone();
        let current = self.scan(false)?;
        for path in current.keys() {
            if !target.contains_key(path) {
                let full = self.root.join(path);
                std::fs::remove_file(&full).map_err(|e| io_err(&full, e))?;
            }
        }
        for (path, blob) in &target {
            if current.get(path) == Some(blob) {
                continue;
            }
            let full = self.root.join(path);
            if let Some(dir) = full.parent() {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            std::fs::write(&full, &self.blobs[blob]).map_err(|e| io_err(&full, e))?;
        }
        Ok(())
    }

    /// Applies a multi-file unified diff restricted to `allowed` paths.
    ///
    /// Sections are written one after another; if a later section fails the
    /// earlier ones stay on disk until the caller rolls back.
    pub fn apply_patch(&mut self, text: &str, allowed: &[String], anchor: Option<Anchor<'_>>) -> Result<(), ExecError> {
        let sections = split_patch(text)?;
        for fp in &sections {
            for p in [&fp.old_path, &fp.new_path].into_iter().flatten() {
                if !is_relative_inside(p) || !allowed.iter().any(|a| a == p) {
                    return Err(ExecError::PatchOutsideSurface { path: p.clone() });
                }
            }
        }
        for fp in &sections {
            let base = match &fp.old_path {
                Some(p) => {
                    let full = self.root.join(p);
                    std::fs::read_to_string(&full).map_err(|e| io_err(&full, e))?
                }
                None => String::new(),
            };
            let out = apply_file_patch(&base, fp, anchor)?;
            match &fp.new_path {
                Some(p) => {
                    let full = self.root.join(p);
                    if let Some(dir) = full.parent() {
                        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                    }
                    std::fs::write(&full, out).map_err(|e| io_err(&full, e))?;
                    if let Some(old) = fp.old_path.as_ref().filter(|o| *o != p) {
                        let full = self.root.join(old);
                        std::fs::remove_file(&full).map_err(|e| io_err(&full, e))?;
                    }
                }
                None => {
                    let full = self.root.join(fp.old_path.as_ref().expect("deleted file has an old path"));
                    std::fs::remove_file(&full).map_err(|e| io_err(&full, e))?;
                }
            }
        }
        Ok(())
    }
}

fn is_relative_inside(path: &str) -> bool {
    !path.is_empty() && Path::new(path).components().all(|c| matches!(c, Component::Normal(_)))
}

/// Applies `patch` for `step` to a clean workspace and returns an undo
/// token: the checkpoint taken just before the edit.
pub fn apply_edit(ws: &mut Workspace, step: &GranularStep, patch: &str) -> Result<CheckpointId, ExecError> {
    if !ws.is_clean()? {
        return Err(ExecError::DirtyWorkspace);
    }
    let token = ws.checkpoint()?;
    let anchor = Anchor { path: &step.delta_intent.path, qualified_name: &step.delta_intent.target_name };
    ws.apply_patch(patch, &step.files, Some(anchor))?;
    Ok(token)
}
