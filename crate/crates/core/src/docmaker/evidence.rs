//! Evidence extraction from source spans and finished neighbor cards.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CardStore, DocError};
use crate::codegraph::{collapse_ws, CodeGraph, Language, NodeId, NodeKind};
use crate::hash::{canonical_json, digest_hex};

/// File contents keyed by repo-relative path.
#[derive(Clone, Debug, Default)]
pub struct SourceSet {
    files: BTreeMap<String, String>,
}

impl SourceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads every file the graph knows about from `root`.
    pub fn load(root: &Path, graph: &CodeGraph) -> Result<Self, DocError> {
        let mut files = BTreeMap::new();
        for path in graph.files() {
            let full = root.join(path);
            let bytes =
                std::fs::read(&full).map_err(|source| DocError::Io { path: full.display().to_string(), source })?;
            files.insert(path.to_string(), String::from_utf8_lossy(&bytes).into_owned());
        }
        Ok(SourceSet { files })
    }

    pub fn insert(&mut self, path: &str, text: &str) {
        self.files.insert(path.to_string(), text.to_string());
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigFlag {
    pub name: String,
    pub default: Option<String>,
    /// `lo..hi` or `{a,b}` from a `range` annotation on the same line.
    pub range: Option<String>,
    /// Absolute byte span of the flag token.
    pub span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborRole {
    pub id: NodeId,
    pub qualified_name: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub subject: NodeId,
    pub kind: NodeKind,
    pub language: Language,
    pub path: String,
    pub qualified_name: String,
    pub signatures: Vec<String>,
    pub default_params: Vec<(String, String)>,
    pub assertions: Vec<String>,
    pub config_flags: Vec<ConfigFlag>,
    pub error_messages: Vec<String>,
    pub neighbors: Vec<NeighborRole>,
}

impl EvidenceBundle {
    pub fn checksum(&self) -> String {
        digest_hex(canonical_json(self))
    }

    /// Parameters of the first signature, if it has a parameter list.
    pub fn params(&self) -> Option<Vec<Param>> {
        self.signatures.first().and_then(|s| signature_params(s, self.language))
    }
}

/// One formal parameter parsed from a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub text: String,
    pub default: Option<String>,
}

/// Collects evidence for `node`. Every calls-successor must already have a
/// card in `cards`.
pub fn extract_evidence(
    graph: &CodeGraph,
    node: NodeId,
    cards: &CardStore,
    sources: &SourceSet,
) -> Result<EvidenceBundle, DocError> {
    let n = graph.node(node).ok_or(DocError::UnknownNode(node))?;
    let mut neighbors = Vec::new();
    for callee in graph.callees(node) {
        let card = cards.get(callee).ok_or(DocError::MissingDependencyCard { node, callee })?;
        let qualified_name = graph.node(callee).map(|c| c.qualified_name.clone()).unwrap_or_default();
        neighbors.push(NeighborRole {
            id: callee,
            qualified_name,
            role: card.role.lines().next().unwrap_or("").to_string(),
        });
    }
    neighbors.sort_by_key(|n| n.id);
    neighbors.dedup_by(|a, b| a.id == b.id);

    let source = sources.get(&n.path).ok_or_else(|| DocError::MissingSource(n.path.clone()))?;
    let (start, end) = (n.span.start.min(source.len()), n.span.end.min(source.len()));
    let body = source.get(start..end).unwrap_or("");

    let signatures: Vec<String> = n.signature.iter().map(|s| collapse_ws(s)).filter(|s| !s.is_empty()).collect();
    let default_params = signatures
        .first()
        .and_then(|s| signature_params(s, n.language))
        .unwrap_or_default()
        .into_iter()
        .filter_map(|p| p.default.map(|d| (p.name, d)))
        .collect();

    Ok(EvidenceBundle {
        subject: node,
        kind: n.kind,
        language: n.language,
        path: n.path.clone(),
        qualified_name: n.qualified_name.clone(),
        signatures,
        default_params,
        assertions: assertions(body, n.language),
        config_flags: config_flags(body, start, n.language),
        error_messages: error_messages(body, n.language),
        neighbors,
    })
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("valid pattern"))
}

/// Index just past the parenthesis matching the one at `open`.
fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in text[open..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Splits on `sep` outside brackets and string literals. Angle brackets
/// count as brackets only when `angles` is set.
fn split_top_level(text: &str, sep: char, angles: bool) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut last = 0;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '<' if angles => depth += 1,
            '>' if angles => depth -= 1,
            _ if c == sep && depth == 0 => {
                out.push(&text[last..i]);
                last = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[last..]);
    out
}

/// Splits a Tcl list into its top-level words, removing one level of braces.
pub fn tcl_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if chars[i] == '{' {
            let mut depth = 0;
            let start = i + 1;
            while i < chars.len() {
                match chars[i] {
                    '{' => depth += 1,
                    '}' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            out.push(chars[start..i.min(chars.len())].iter().collect());
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        }
    }
    out
}

/// Parses the parameter list of a collapsed signature. `None` when the
/// signature has no recognizable list.
pub fn signature_params(sig: &str, language: Language) -> Option<Vec<Param>> {
    if language == Language::Tcl {
        let words = tcl_list(sig);
        if words.first().map(String::as_str) != Some("proc") || words.len() < 3 {
            return None;
        }
        return Some(
            tcl_list(&words[2])
                .into_iter()
                .filter(|w| !w.is_empty())
                .map(|w| {
                    let parts = tcl_list(&w);
                    Param { name: parts.first().cloned().unwrap_or_default(), default: parts.get(1).cloned(), text: w }
                })
                .collect(),
        );
    }
    let mut open = sig.find('(')?;
    if sig[..open].trim_end().ends_with("operator") && sig[open..].starts_with("()") {
        open = open + 2 + sig[open + 2..].find('(')?;
    }
    let close = matching_paren(sig, open)?;
    let inner = sig[open + 1..close - 1].trim();
    if inner.is_empty() || inner == "void" {
        return Some(Vec::new());
    }
    let ident = re(&IDENT, r"[A-Za-z_][A-Za-z0-9_]*");
    let mut out = Vec::new();
    for (i, raw) in split_top_level(inner, ',', true).into_iter().enumerate() {
        let text = collapse_ws(raw);
        let (decl, default) = match text.find('=') {
            Some(eq) => (text[..eq].trim().to_string(), Some(text[eq + 1..].trim().to_string())),
            None => (text.clone(), None),
        };
        let name = if language == Language::Python {
            let head = decl.split(':').next().unwrap_or("").trim();
            head.trim_start_matches('*').to_string()
        } else if decl == "..." {
            "...".to_string()
        } else {
            let d = decl.split('[').next().unwrap_or(&decl);
            let idents: Vec<&str> =
                ident.find_iter(d).map(|m| m.as_str()).filter(|w| !QUALIFIERS.contains(w)).collect();
            if idents.len() >= 2 || (idents.len() == 1 && language == Language::Verilog) {
                idents.last().expect("nonempty").to_string()
            } else {
                format!("arg{i}")
            }
        };
        out.push(Param { name, text, default });
    }
    Some(out)
}

const QUALIFIERS: [&str; 10] =
    ["const", "volatile", "struct", "class", "enum", "union", "typename", "register", "signed", "unsigned"];

static IDENT: OnceLock<Regex> = OnceLock::new();
static ASSERT_CALL: OnceLock<Regex> = OnceLock::new();
static ERROR_LINE: OnceLock<Regex> = OnceLock::new();
static DQ_STRING: OnceLock<Regex> = OnceLock::new();
static SQ_STRING: OnceLock<Regex> = OnceLock::new();
static TCL_FLAG: OnceLock<Regex> = OnceLock::new();
static QUOTED_FLAG: OnceLock<Regex> = OnceLock::new();
static RANGE_NOTE: OnceLock<Regex> = OnceLock::new();
static DEFAULT_NOTE: OnceLock<Regex> = OnceLock::new();
static FLAG_VALUE: OnceLock<Regex> = OnceLock::new();

fn assertions(body: &str, language: Language) -> Vec<String> {
    let mut out = Vec::new();
    if language == Language::Python {
        for line in body.lines() {
            if let Some(rest) = line.trim_start().strip_prefix("assert ") {
                let rest = rest.split(" #").next().unwrap_or(rest);
                let cond = split_top_level(rest, ',', false)[0].trim();
                if !cond.is_empty() {
                    out.push(collapse_ws(cond));
                }
            }
        }
        return out;
    }
    let call = re(&ASSERT_CALL, r"\b(?:assert|static_assert|ASSERT|DCHECK|CHECK|BOOST_ASSERT)\s*\(");
    for m in call.find_iter(body) {
        let open = m.end() - 1;
        if let Some(close) = matching_paren(body, open) {
            let inner = &body[open + 1..close - 1];
            let cond =
                if m.as_str().starts_with("static_assert") { split_top_level(inner, ',', false)[0] } else { inner };
            out.push(collapse_ws(cond));
        }
    }
    out
}

fn error_messages(body: &str, language: Language) -> Vec<String> {
    let trigger = re(&ERROR_LINE, r"(?i)\b(?:error|warn|warning|throw|raise|fatal|critical|abort)\b|puts\s+stderr");
    let dq = re(&DQ_STRING, r#""((?:[^"\\\n]|\\.)*)""#);
    let sq = re(&SQ_STRING, r"'((?:[^'\\\n]|\\.)*)'");
    let mut out: Vec<String> = Vec::new();
    for line in body.lines() {
        if !trigger.is_match(line) {
            continue;
        }
        let mut found: Vec<(usize, String)> =
            dq.captures_iter(line).map(|c| (c.get(0).unwrap().start(), c[1].to_string())).collect();
        if language == Language::Python {
            found.extend(sq.captures_iter(line).map(|c| (c.get(0).unwrap().start(), c[1].to_string())));
            found.sort();
        }
        for (_, s) in found {
            let looks_like_flag = s.starts_with('-') && !s.contains(' ');
            if !s.trim().is_empty() && !looks_like_flag && !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

fn config_flags(body: &str, base: usize, language: Language) -> Vec<ConfigFlag> {
    let pattern = if language == Language::Tcl {
        re(&TCL_FLAG, r"(--?[A-Za-z][A-Za-z0-9_]*)")
    } else {
        re(&QUOTED_FLAG, r#""(--?[A-Za-z][A-Za-z0-9_\-]*)""#)
    };
    let range_note = re(&RANGE_NOTE, r"\brange\s*[:=]?\s*(\{[^}]*\}|[-+]?[0-9.eE]+\s*\.\.\s*[-+]?[0-9.eE]+)");
    let default_note = re(&DEFAULT_NOTE, r"\bdefault\s*[:=]\s*([^\s,;]+)");
    let value = re(&FLAG_VALUE, r#"^\s+("[^"]*"|[-+]?[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)(?:$|[\s}\]])"#);

    let mut out: Vec<ConfigFlag> = Vec::new();
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let comment_at = line.find('#').into_iter().chain(line.find("//")).min();
        let comment = comment_at.map(|c| &line[c..]).unwrap_or("");
        let range = range_note.captures(comment).map(|c| c[1].split_whitespace().collect::<String>());
        let noted_default = default_note.captures(comment).map(|c| c[1].to_string());
        for c in pattern.captures_iter(line) {
            let m = c.get(1).expect("flag group");
            if comment_at.is_some_and(|at| m.start() > at) || out.iter().any(|f| f.name == m.as_str()) {
                continue;
            }
            if language == Language::Tcl {
                let before = line[..m.start()].chars().next_back();
                let after = line[m.end()..].chars().next();
                let opens = before.is_none_or(|c| c.is_whitespace() || "{[\"".contains(c));
                let closes = after.is_none_or(|c| c.is_whitespace() || "}]\"".contains(c));
                if !opens || !closes {
                    continue;
                }
            }
            let after = &line[m.end()..];
            let after = after.strip_prefix('"').unwrap_or(after);
            let inline = value.captures(after).map(|v| v[1].trim_matches('"').to_string());
            out.push(ConfigFlag {
                name: m.as_str().to_string(),
                default: noted_default.clone().or(inline),
                range: range.clone(),
                span: (base + offset + m.start(), base + offset + m.end()),
            });
        }
        offset += line.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpp_params_and_defaults() {
        let p = signature_params("int Opendp::place(int x, int k = 8)", Language::Cpp).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].name, "x");
        assert_eq!((p[1].name.as_str(), p[1].default.as_deref()), ("k", Some("8")));
        assert_eq!(signature_params("void f(void)", Language::C).unwrap(), vec![]);
        let unnamed = signature_params("void f(int, const Foo&)", Language::Cpp).unwrap();
        assert_eq!(unnamed[0].name, "arg0");
        assert_eq!(unnamed[1].name, "arg1");
        let op = signature_params("bool Cmp::operator()(int a, int b) const", Language::Cpp).unwrap();
        assert_eq!(op.len(), 2);
        let tmpl = signature_params("void f(std::map<int, int> m, int n)", Language::Cpp).unwrap();
        assert_eq!(tmpl.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["m", "n"]);
    }

    #[test]
    fn python_and_tcl_params() {
        let p = signature_params("def run(self, design: str, k=8, *args, **kw)", Language::Python).unwrap();
        let names: Vec<_> = p.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["self", "design", "k", "args", "kw"]);
        assert_eq!(p[2].default.as_deref(), Some("8"));
        let t = signature_params("proc gp_opt {design {density 0.7}}", Language::Tcl).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[1].name.as_str(), t[1].default.as_deref()), ("density", Some("0.7")));
        assert_eq!(signature_params("gp_opt", Language::Tcl), None);
    }

    #[test]
    fn assertion_extraction() {
        let body =
            "int f(int x, int k = 8) {\n  assert(x > 0);\n  static_assert(sizeof(int) == 4, \"int\");\n  return x;\n}";
        assert_eq!(assertions(body, Language::Cpp), ["x > 0", "sizeof(int) == 4"]);
        let py = "def f(x):\n    assert x > 0, 'positive'\n";
        assert_eq!(assertions(py, Language::Python), ["x > 0"]);
    }

    #[test]
    fn error_message_extraction() {
        let body = "  if (x < 0) {\n    logger->error(DPL, 12, \"negative site count\");\n  }\n  printf(\"ok\");\n";
        assert_eq!(error_messages(body, Language::Cpp), ["negative site count"]);
        let tcl = "error \"missing -density\"\n";
        assert_eq!(error_messages(tcl, Language::Tcl), ["missing -density"]);
    }

    #[test]
    fn tcl_flags_with_annotations() {
        let body = "proc gp {args} {\n  parse_key_args gp args keys {-density -overflow} ;# range: 0.1..1.0 default: 0.7\n  if {[info exists keys(-density)]} {}\n}\n";
        let flags = config_flags(body, 100, Language::Tcl);
        let names: Vec<_> = flags.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["-density", "-overflow"]);
        assert_eq!(flags[0].range.as_deref(), Some("0.1..1.0"));
        assert_eq!(flags[0].default.as_deref(), Some("0.7"));
        let at = body.find("-density").unwrap();
        assert_eq!(flags[0].span, (100 + at, 100 + at + 8));
    }

    #[test]
    fn quoted_flags_in_native_code() {
        let body = "  parser.add(\"-max_displacement\", 5);  // range: {1,5,10}\n  x = y - z;\n";
        let flags = config_flags(body, 0, Language::Cpp);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].name, "-max_displacement");
        assert_eq!(flags[0].range.as_deref(), Some("{1,5,10}"));
        assert_eq!(flags[0].default, None);
        let tcl = config_flags("set_opt -iterations 20\n", 0, Language::Tcl);
        assert_eq!(tcl[0].default.as_deref(), Some("20"));
    }

    #[test]
    fn tcl_list_split() {
        assert_eq!(tcl_list("a {b c} {d {e f}}"), ["a", "b c", "d {e f}"]);
    }
}
