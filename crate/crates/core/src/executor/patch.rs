//! Multi-file unified diffs and their application.

use diffy::{Line, Patch};

use super::ExecError;
use crate::codegraph::{file_entities, NodeKind};

/// One file's section of a unified diff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilePatch {
    /// Path before the change; `None` for a created file.
    pub old_path: Option<String>,
    /// Path after the change; `None` for a deleted file.
    pub new_path: Option<String>,
    pub text: String,
}

impl FilePatch {
    /// The file this section reads or writes.
    pub fn path(&self) -> &str {
        self.new_path.as_deref().or(self.old_path.as_deref()).unwrap_or("")
    }
}

fn header_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim();
    if raw == "/dev/null" {
        return None;
    }
    let p = raw.strip_prefix("a/").or_else(|| raw.strip_prefix("b/")).unwrap_or(raw);
    Some(p.to_string())
}

/// Splits `text` into per-file sections at each `---`/`+++` header pair.
/// Lines before the first header (`diff --git`, `index`) are dropped.
pub fn split_patch(text: &str) -> Result<Vec<FilePatch>, ExecError> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut starts = Vec::new();
    let mut i = 0;
    while i + 1 < lines.len() {
        if lines[i].starts_with("--- ") && lines[i + 1].starts_with("+++ ") {
            starts.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    if starts.is_empty() {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        return Err(ExecError::MalformedPatch("no file headers found".into()));
    }
    let mut out = Vec::new();
    for (k, &s) in starts.iter().enumerate() {
        let mut end = starts.get(k + 1).copied().unwrap_or(lines.len());
        // `diff --git` / `index` preamble of the next section.
        while end > s + 2 && !is_hunk_body(lines[end - 1]) {
            end -= 1;
        }
        let body: String = lines[s..end].concat();
        out.push(FilePatch {
            old_path: header_path(&lines[s][4..]),
            new_path: header_path(&lines[s + 1][4..]),
            text: body,
        });
    }
    Ok(out)
}

fn is_hunk_body(line: &str) -> bool {
    line.starts_with(' ')
        || line.starts_with('+')
        || line.starts_with('-')
        || line.starts_with("@@")
        || line.starts_with('\\')
        || line == "\n"
}

/// Target the fallback matcher re-locates when a hunk's context no longer
/// applies verbatim.
#[derive(Clone, Copy, Debug)]
pub struct Anchor<'a> {
    pub path: &'a str,
    pub qualified_name: &'a str,
}

/// Applies one file section to `base`.
///
/// Hunks go through a strict context match first. If that fails and the
/// section targets the anchor's file, each hunk is matched again inside the
/// anchor node's current span (located by a fresh parse), comparing lines
/// with surrounding whitespace ignored.
pub fn apply_file_patch(base: &str, fp: &FilePatch, anchor: Option<Anchor<'_>>) -> Result<String, ExecError> {
    let patch = Patch::from_str(&fp.text).map_err(|e| ExecError::MalformedPatch(e.to_string()))?;
    if let Ok(out) = diffy::apply(base, &patch) {
        return Ok(out);
    }
    let path = fp.path().to_string();
    let Some(anchor) = anchor.filter(|a| a.path == path) else {
        return Err(ExecError::HunkMismatch { path });
    };
    let entities = file_entities(&path, base.as_bytes()).unwrap_or_default();
    let node = entities
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Definition | NodeKind::Declaration))
        .filter(|n| n.qualified_name == anchor.qualified_name)
        .min_by_key(|n| (n.kind != NodeKind::Definition, n.span.start))
        .ok_or_else(|| ExecError::AnchorLost { target: anchor.qualified_name.to_string() })?;
    reanchor(base, &patch, node.span.start, node.span.end).ok_or(ExecError::HunkMismatch { path })
}

fn reanchor(base: &str, patch: &Patch<'_, str>, span_start: usize, span_end: usize) -> Option<String> {
    let mut lines: Vec<String> = base.split_inclusive('\n').map(str::to_string).collect();
    let mut offset = 0;
    let mut first = None;
    let mut last = 0;
    for (i, l) in lines.iter().enumerate() {
        let end = offset + l.len();
        if end > span_start && offset < span_end.max(span_start + 1) {
            first.get_or_insert(i);
            last = i + 1;
        }
        offset = end;
    }
    let mut cursor = first?;
    let mut window_end = last;
    for hunk in patch.hunks() {
        let pre: Vec<&str> = hunk
            .lines()
            .iter()
            .filter_map(|l| match l {
                Line::Context(t) | Line::Delete(t) => Some(t.trim()),
                Line::Insert(_) => None,
            })
            .collect();
        if pre.is_empty() {
            return None;
        }
        let at = (cursor..window_end.saturating_sub(pre.len() - 1))
            .find(|&i| lines[i..i + pre.len()].iter().zip(&pre).all(|(a, b)| a.trim() == *b))?;
        let mut replacement = Vec::new();
        let mut k = at;
        for l in hunk.lines() {
            match l {
                Line::Context(_) => {
                    replacement.push(lines[k].clone());
                    k += 1;
                }
                Line::Delete(_) => k += 1,
                Line::Insert(t) => {
                    let mut t = t.to_string();
                    if !t.ends_with('\n') {
                        t.push('\n');
                    }
                    replacement.push(t);
                }
            }
        }
        let added = replacement.len();
        lines.splice(at..at + pre.len(), replacement);
        cursor = at + added;
        window_end = window_end + added - pre.len();
    }
    Some(lines.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_FILES: &str = "diff --git a/src/a.cc b/src/a.cc\nindex 1..2 100644\n--- a/src/a.cc\n+++ b/src/a.cc\n@@ -1,1 +1,1 @@\n-int a = 1;\n+int a = 2;\ndiff --git a/src/b.cc b/src/b.cc\n--- /dev/null\n+++ b/src/b.cc\n@@ -0,0 +1,1 @@\n+int b;\n";

    #[test]
    fn splits_sections() {
        let parts = split_patch(TWO_FILES).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].path(), "src/a.cc");
        assert!(!parts[0].text.contains("diff --git"));
        assert_eq!(parts[1].old_path, None);
        assert_eq!(parts[1].path(), "src/b.cc");
        assert_eq!(apply_file_patch("", &parts[1], None).unwrap(), "int b;\n");
        assert!(split_patch("").unwrap().is_empty());
        assert!(split_patch("garbage").is_err());
    }

    #[test]
    fn strict_apply() {
        let parts = split_patch(TWO_FILES).unwrap();
        assert_eq!(apply_file_patch("int a = 1;\n", &parts[0], None).unwrap(), "int a = 2;\n");
    }

    const SRC: &str = "int helper() { return 1; }\n\nint place(int k) {\n    int w = 4;\n    return w * k;\n}\n";

    fn reindented_patch() -> FilePatch {
        split_patch("--- a/p.cc\n+++ b/p.cc\n@@ -4,2 +4,2 @@\n-  int w = 4;\n+  int w = 8;\n   return w * k;\n")
            .unwrap()
            .remove(0)
    }

    #[test]
    fn reanchors_inside_target_span() {
        let fp = reindented_patch();
        let anchor = Anchor { path: "p.cc", qualified_name: "place" };
        assert!(matches!(apply_file_patch(SRC, &fp, None), Err(ExecError::HunkMismatch { .. })));
        let out = apply_file_patch(SRC, &fp, Some(anchor)).unwrap();
        assert!(out.contains("int w = 8;\n    return w * k;"));
        assert!(out.starts_with("int helper()"));
    }

    #[test]
    fn lost_anchor_reported() {
        let fp = reindented_patch();
        let anchor = Anchor { path: "p.cc", qualified_name: "gone" };
        assert!(matches!(apply_file_patch(SRC, &fp, Some(anchor)), Err(ExecError::AnchorLost { .. })));
    }
}
