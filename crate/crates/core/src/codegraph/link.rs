//! Cross-language linking from script commands to their C/C++ handlers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::short_name;
use super::{CodeGraph, EdgeKind, GraphEdge, GraphError, NodeId, NodeKind};

/// A C/C++ function that registers script commands, and which argument
/// (zero-based) carries the command name. The handler is the first
/// identifier argument after the name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationPattern {
    pub function: String,
    pub name_arg: usize,
}

impl RegistrationPattern {
    pub fn new(function: &str, name_arg: usize) -> Self {
        RegistrationPattern { function: function.to_string(), name_arg }
    }

    pub fn defaults() -> Vec<RegistrationPattern> {
        vec![
            RegistrationPattern::new("register_cmd", 0),
            RegistrationPattern::new("Tcl_CreateCommand", 1),
            RegistrationPattern::new("Tcl_CreateObjCommand", 1),
        ]
    }

    /// Parses `function:position`.
    pub fn parse(spec: &str) -> Option<Self> {
        let (f, pos) = spec.rsplit_once(':')?;
        Some(RegistrationPattern::new(f, pos.parse().ok()?))
    }
}

/// Diagnostic tally from [`link_scripts`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub registrations: usize,
    pub edges_added: usize,
    /// Registrations whose command name is not a string literal.
    pub skipped_nonliteral: usize,
    /// Registrations whose handler does not resolve to a definition.
    pub unresolved_handlers: usize,
    /// Registered commands no script invokes.
    pub uninvoked: usize,
}

/// Adds `script_invokes` edges from script callsites to the C/C++
/// definitions registered under the invoked command name. No other edge
/// changes.
pub fn link_scripts(
    graph: &CodeGraph,
    patterns: &[RegistrationPattern],
) -> Result<(CodeGraph, LinkReport), GraphError> {
    if graph.condensed {
        return Err(GraphError::AlreadyCondensed);
    }
    let mut report = LinkReport::default();
    let mut commands: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();

    for call in graph.nodes.values() {
        if call.kind != NodeKind::Callsite || !call.language.is_native() {
            continue;
        }
        let Some(pattern) =
            patterns.iter().find(|p| p.function == call.qualified_name || short_name(&p.function) == call.short_name())
        else {
            continue;
        };
        report.registrations += 1;
        let args = split_args(call.signature.as_deref().unwrap_or(""));
        let Some(command) = args.get(pattern.name_arg).and_then(|a| string_literal(a)) else {
            report.skipped_nonliteral += 1;
            continue;
        };
        let handler = args[pattern.name_arg + 1..].iter().find_map(|a| handler_name(a));
        let targets: Vec<NodeId> = handler
            .map(|h| {
                graph
                    .resolve_name(&h)
                    .into_iter()
                    .filter(|id| {
                        let n = &graph.nodes[id];
                        n.kind == NodeKind::Definition && n.language.is_native()
                    })
                    .collect()
            })
            .unwrap_or_default();
        if targets.is_empty() {
            report.unresolved_handlers += 1;
            continue;
        }
        commands.entry(command).or_default().extend(targets);
    }

    let mut edges = graph.edges.clone();
    let mut invoked = std::collections::BTreeSet::new();
    for call in graph.nodes.values() {
        if call.kind != NodeKind::Callsite || !call.language.is_script() {
            continue;
        }
        let hit = commands.get(call.qualified_name.as_str()).or_else(|| commands.get(call.short_name()));
        if let Some(defs) = hit {
            let name = if commands.contains_key(call.qualified_name.as_str()) {
                call.qualified_name.as_str()
            } else {
                call.short_name()
            };
            invoked.insert(name.to_string());
            let mut defs = defs.clone();
            defs.sort();
            defs.dedup();
            for d in defs {
                edges.push(GraphEdge::new(call.id, d, EdgeKind::ScriptInvokes));
                report.edges_added += 1;
            }
        }
    }
    report.uninvoked = commands.keys().filter(|k| !invoked.contains(*k)).count();
    let out = CodeGraph::from_parts_unchecked(graph.repo_fingerprint.clone(), graph.nodes.clone(), edges, false);
    Ok((out, report))
}

/// Splits a parenthesized argument list at top-level commas.
fn split_args(list: &str) -> Vec<String> {
    let inner = list.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(list);
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    let mut cur = String::new();
    for c in inner.chars() {
        if in_str {
            cur.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                cur.push(c);
            }
            '(' | '[' | '{' | '<' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' | '}' | '>' => {
                depth -= 1;
                cur.push(c);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn string_literal(arg: &str) -> Option<String> {
    let s = arg.trim();
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    (!inner.contains('"')).then(|| inner.to_string())
}

/// `dpMain`, `&dpMain`, `dpl::dpMain`, `(Tcl_CmdProc*) dpMain` all name a
/// handler.
fn handler_name(arg: &str) -> Option<String> {
    let s = arg.trim();
    let s = match s.rfind(')') {
        Some(i) if s.starts_with('(') => s[i + 1..].trim(),
        _ => s,
    };
    let s = s.trim_start_matches('&').trim();
    let ok = !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == ':')
        && !s.chars().next().unwrap().is_ascii_digit();
    (ok && s != "nullptr" && s != "NULL").then(|| s.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_splitting() {
        assert_eq!(split_args("(interp, \"a,b\", f(x, y), &g)"), vec!["interp", "\"a,b\"", "f(x, y)", "&g"]);
        assert!(split_args("()").is_empty());
    }

    #[test]
    fn handler_forms() {
        assert_eq!(handler_name("dpMain").as_deref(), Some("dpMain"));
        assert_eq!(handler_name("&dpl::dpMain").as_deref(), Some("dpl::dpMain"));
        assert_eq!(handler_name("(Tcl_CmdProc*) dpMain").as_deref(), Some("dpMain"));
        assert_eq!(handler_name("nullptr"), None);
        assert_eq!(handler_name("\"x\""), None);
    }

    #[test]
    fn pattern_parse() {
        assert_eq!(
            RegistrationPattern::parse("Tcl_CreateCommand:1"),
            Some(RegistrationPattern::new("Tcl_CreateCommand", 1))
        );
        assert_eq!(RegistrationPattern::parse("nope"), None);
    }
}
