//! Repository scan and graph assembly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tracing::{debug, warn};

use super::extract::{extract, FileExtract};
use super::parse::parse_source;
use super::{CodeGraph, EdgeKind, GraphEdge, GraphError, GraphNode, Language, NodeId, NodeKind};
use crate::hash::FieldHasher;

/// Include directories per source file, as extracted from the build system.
/// Keys and values are repository-relative paths.
pub type BuildMetadata = BTreeMap<String, Vec<String>>;

/// One accepted source file.
#[derive(Clone, Debug)]
pub(crate) struct SourceFile {
    pub path: String,
    pub language: Language,
    pub bytes: Vec<u8>,
}

/// Lists accepted source files under `root` in path order. Hidden
/// directories are skipped.
pub(crate) fn scan_repo(root: &Path) -> Result<Vec<(String, Language)>, GraphError> {
    if !root.is_dir() {
        return Err(GraphError::Io {
            path: root.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "repository root not found"),
        });
    }
    let mut out = Vec::new();
    let walker = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(|e| GraphError::Io {
            path: e.path().map(|p| p.display().to_string()).unwrap_or_default(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = relative_path(root, entry.path());
        if let Some(lang) = Language::from_path(&rel) {
            out.push((rel, lang));
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

pub(crate) fn read_source(root: &Path, path: &str, language: Language) -> Result<SourceFile, GraphError> {
    let full: PathBuf = root.join(path);
    let bytes = std::fs::read(&full).map_err(|source| GraphError::Io { path: path.to_string(), source })?;
    Ok(SourceFile { path: path.to_string(), language, bytes })
}

/// Parses and extracts one file; undecodable files are skipped with a warning.
pub(crate) fn extract_file(file: &SourceFile) -> Result<Option<FileExtract>, GraphError> {
    match parse_source(&file.bytes, file.language) {
        Ok(tree) => Ok(Some(extract(&file.path, &tree))),
        Err(GraphError::UndecodableBytes(at)) => {
            warn!(path = %file.path, offset = at, "skipping file that is not valid UTF-8");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Parses every accepted file under `repo_root` into an uncondensed graph.
pub fn build_graph(repo_root: &Path, build_metadata: Option<&BuildMetadata>) -> Result<CodeGraph, GraphError> {
    let listing = scan_repo(repo_root)?;
    let sources: Vec<SourceFile> =
        listing.par_iter().map(|(path, lang)| read_source(repo_root, path, *lang)).collect::<Result<_, _>>()?;
    let extracts: Vec<(SourceFile, FileExtract)> = sources
        .into_par_iter()
        .map(|src| extract_file(&src).map(|x| x.map(|x| (src, x))))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    if extracts.is_empty() {
        return Err(GraphError::EmptyRepository);
    }
    let fingerprint = fingerprint(extracts.iter().map(|(s, _)| (s.path.as_str(), s.bytes.as_slice())));
    let known: BTreeSet<String> = extracts.iter().map(|(s, _)| s.path.clone()).collect();
    let resolver = PathResolver::new(&known, build_metadata);

    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    let file_ids: BTreeMap<String, NodeId> = extracts.iter().map(|(_, x)| (x.file.path.clone(), x.file.id)).collect();
    for (_, x) in &extracts {
        edges.extend(file_edges(x, &resolver, &file_ids));
        insert_nodes(&mut nodes, x);
    }
    edges.extend(derived_edges(&nodes, &edges));
    Ok(CodeGraph::from_parts_unchecked(fingerprint, nodes, edges, false))
}

/// Entities a single file declares, or `None` when it cannot be parsed.
pub(crate) fn file_entities(path: &str, bytes: &[u8]) -> Option<Vec<GraphNode>> {
    let language = Language::from_path(path)?;
    let tree = parse_source(bytes, language).ok()?;
    Some(extract(path, &tree).entities)
}

pub(crate) fn fingerprint<'a>(files: impl Iterator<Item = (&'a str, &'a [u8])>) -> String {
    let mut h = FieldHasher::new();
    for (path, bytes) in files {
        h.field(path).field(bytes);
    }
    h.finish_hex()
}

pub(crate) fn insert_nodes(nodes: &mut BTreeMap<NodeId, GraphNode>, x: &FileExtract) {
    nodes.insert(x.file.id, x.file.clone());
    for n in &x.entities {
        nodes.insert(n.id, n.clone());
    }
}

/// Edges fixed by one file's own content: containment, includes, imports.
pub(crate) fn file_edges(
    x: &FileExtract,
    resolver: &PathResolver<'_>,
    file_ids: &BTreeMap<String, NodeId>,
) -> Vec<GraphEdge> {
    let mut edges = Vec::new();
    for n in &x.entities {
        edges.push(GraphEdge::new(x.file.id, n.id, EdgeKind::Contains));
    }
    for (def, call) in &x.enclosed {
        edges.push(GraphEdge::new(*def, *call, EdgeKind::Contains));
    }
    for inc in &x.includes {
        match resolver.resolve_include(&x.file.path, &inc.target, inc.system) {
            Some(target) => {
                if let Some(dst) = file_ids.get(&target) {
                    edges.push(GraphEdge::new(x.file.id, *dst, EdgeKind::Includes));
                }
            }
            None => debug!(file = %x.file.path, include = %inc.target, "unresolved include"),
        }
    }
    for imp in &x.imports {
        let target = match x.file.language {
            Language::Python => resolver.resolve_python_module(&x.file.path, imp),
            _ => resolver.resolve_relative(&x.file.path, imp),
        };
        if let Some(dst) = target.and_then(|t| file_ids.get(&t)) {
            edges.push(GraphEdge::new(x.file.id, *dst, EdgeKind::Imports));
        }
    }
    edges
}

/// Calls and binds edges, computed from nodes and containment alone so they
/// can be recomputed after any node-level change.
pub(crate) fn derived_edges(nodes: &BTreeMap<NodeId, GraphNode>, edges: &[GraphEdge]) -> Vec<GraphEdge> {
    let mut enclosing: HashMap<NodeId, NodeId> = HashMap::new();
    for e in edges {
        if e.kind == EdgeKind::Contains {
            if let (Some(src), Some(dst)) = (nodes.get(&e.src), nodes.get(&e.dst)) {
                if src.kind == NodeKind::Definition && dst.kind == NodeKind::Callsite {
                    enclosing.insert(dst.id, src.id);
                }
            }
        }
    }

    let mut defs_exact: HashMap<(u8, &str), Vec<&GraphNode>> = HashMap::new();
    let mut defs_short: HashMap<(u8, &str), Vec<&GraphNode>> = HashMap::new();
    let mut decls_by_file: HashMap<(&str, &str), Vec<&GraphNode>> = HashMap::new();
    for n in nodes.values() {
        match n.kind {
            NodeKind::Definition => {
                let fam = n.language.family();
                defs_exact.entry((fam, &n.qualified_name)).or_default().push(n);
                defs_short.entry((fam, n.short_name())).or_default().push(n);
            }
            NodeKind::Declaration => {
                decls_by_file.entry((&n.path, n.short_name())).or_default().push(n);
            }
            _ => {}
        }
    }

    let mut out = Vec::new();
    for n in nodes.values() {
        match n.kind {
            NodeKind::Callsite => {
                if let Some(caller) = enclosing.get(&n.id) {
                    for target in resolve_call(n, &defs_exact, &defs_short) {
                        out.push(GraphEdge::new(*caller, target, EdgeKind::Calls));
                    }
                }
                if let Some(decls) = decls_by_file.get(&(n.path.as_str(), n.short_name())) {
                    for d in decls {
                        out.push(GraphEdge::new(n.id, d.id, EdgeKind::Binds));
                    }
                }
            }
            NodeKind::Definition => {
                if let Some(decls) = decls_by_file.get(&(n.path.as_str(), n.short_name())) {
                    for d in decls.iter().filter(|d| d.qualified_name == n.qualified_name) {
                        out.push(GraphEdge::new(n.id, d.id, EdgeKind::Binds));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// Definitions a callsite may reach: exact qualified match, else suffix or
/// short-name match. Same-file candidates shadow the rest.
fn resolve_call(
    call: &GraphNode,
    exact: &HashMap<(u8, &str), Vec<&GraphNode>>,
    short: &HashMap<(u8, &str), Vec<&GraphNode>>,
) -> Vec<NodeId> {
    let fam = call.language.family();
    let name = call.qualified_name.as_str();
    let mut cands: Vec<&GraphNode> = exact.get(&(fam, name)).cloned().unwrap_or_default();
    if cands.is_empty() {
        let short_key = call.short_name();
        let pool = short.get(&(fam, short_key)).cloned().unwrap_or_default();
        cands = if short_key == name {
            pool
        } else {
            pool.into_iter()
                .filter(|d| {
                    d.qualified_name.ends_with(&format!("::{}", name))
                        || d.qualified_name.ends_with(&format!(".{}", name))
                })
                .collect()
        };
    }
    if cands.iter().any(|d| d.path == call.path) {
        cands.retain(|d| d.path == call.path);
    }
    let mut ids: Vec<NodeId> = cands.iter().map(|d| d.id).collect();
    ids.sort();
    ids.dedup();
    ids
}

/// Resolves include/import strings to repository files.
pub(crate) struct PathResolver<'a> {
    known: &'a BTreeSet<String>,
    metadata: Option<&'a BuildMetadata>,
}

impl<'a> PathResolver<'a> {
    pub fn new(known: &'a BTreeSet<String>, metadata: Option<&'a BuildMetadata>) -> Self {
        PathResolver { known, metadata }
    }

    pub fn resolve_include(&self, from: &str, target: &str, system: bool) -> Option<String> {
        if !system {
            if let Some(p) = self.resolve_relative_only(from, target) {
                return Some(p);
            }
        }
        if let Some(dirs) = self.metadata.and_then(|m| m.get(from)) {
            for dir in dirs {
                let cand = normalize(&format!("{}/{}", dir.trim_end_matches('/'), target));
                if self.known.contains(&cand) {
                    return Some(cand);
                }
            }
        }
        let found = self.by_suffix(target);
        if found.is_some() {
            debug!(file = from, include = target, "include resolved by path matching");
        }
        found
    }

    pub fn resolve_relative(&self, from: &str, target: &str) -> Option<String> {
        self.resolve_relative_only(from, target)
            .or_else(|| self.known.contains(&normalize(target)).then(|| normalize(target)))
            .or_else(|| self.by_suffix(target))
    }

    pub fn resolve_python_module(&self, from: &str, module: &str) -> Option<String> {
        if module.starts_with('.') {
            let dots = module.chars().take_while(|c| *c == '.').count();
            let rest = module[dots..].replace('.', "/");
            let mut base = parent_dir(from).to_string();
            for _ in 1..dots {
                base = parent_dir(&base).to_string();
            }
            for cand in [format!("{}/{}.py", base, rest), format!("{}/{}/__init__.py", base, rest)] {
                let cand = normalize(cand.trim_start_matches('/'));
                if self.known.contains(&cand) {
                    return Some(cand);
                }
            }
            return None;
        }
        let rel = module.replace('.', "/");
        for cand in [format!("{}.py", rel), format!("{}/__init__.py", rel)] {
            if let Some(p) = self.resolve_relative(from, &cand) {
                return Some(p);
            }
        }
        None
    }

    fn resolve_relative_only(&self, from: &str, target: &str) -> Option<String> {
        let dir = parent_dir(from);
        let cand = if dir.is_empty() { normalize(target) } else { normalize(&format!("{}/{}", dir, target)) };
        self.known.contains(&cand).then_some(cand)
    }

    /// Shortest known path ending in `/target` (or equal to it).
    fn by_suffix(&self, target: &str) -> Option<String> {
        let target = normalize(target);
        let suffix = format!("/{}", target);
        self.known
            .iter()
            .filter(|p| **p == target || p.ends_with(&suffix))
            .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
            .cloned()
    }
}

fn parent_dir(path: &str) -> &str {
    path.rsplit_once('/').map(|(d, _)| d).unwrap_or("")
}

/// Collapses `.` and `..` components of a `/`-separated relative path.
fn normalize(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for comp in path.split('/') {
        match comp {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            c => parts.push(c),
        }
    }
    parts.join("/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_paths() {
        assert_eq!(normalize("a/./b/../c.h"), "a/c.h");
        assert_eq!(normalize("./x.h"), "x.h");
    }

    #[test]
    fn include_resolution_order() {
        let known: BTreeSet<String> =
            ["src/a.cc", "src/a.h", "inc/b.h", "deep/x/b.h", "c.h"].iter().map(|s| s.to_string()).collect();
        let mut meta = BuildMetadata::new();
        meta.insert("src/a.cc".into(), vec!["deep/x".into()]);
        let with_meta = PathResolver::new(&known, Some(&meta));
        assert_eq!(with_meta.resolve_include("src/a.cc", "a.h", false).as_deref(), Some("src/a.h"));
        assert_eq!(with_meta.resolve_include("src/a.cc", "b.h", false).as_deref(), Some("deep/x/b.h"));
        let without = PathResolver::new(&known, None);
        // Degrades to the shortest matching path.
        assert_eq!(without.resolve_include("src/a.cc", "b.h", false).as_deref(), Some("inc/b.h"));
        assert_eq!(without.resolve_include("src/a.cc", "nope.h", false), None);
    }

    #[test]
    fn python_modules() {
        let known: BTreeSet<String> =
            ["pkg/__init__.py", "pkg/util.py", "tools/run.py"].iter().map(|s| s.to_string()).collect();
        let r = PathResolver::new(&known, None);
        assert_eq!(r.resolve_python_module("tools/run.py", "pkg.util").as_deref(), Some("pkg/util.py"));
        assert_eq!(r.resolve_python_module("tools/run.py", "pkg").as_deref(), Some("pkg/__init__.py"));
        assert_eq!(r.resolve_python_module("pkg/util.py", ".").as_deref(), Some("pkg/__init__.py"));
        assert_eq!(r.resolve_python_module("tools/run.py", "os"), None);
    }
}
