//! Per-file entity extraction from syntax trees.

use super::parse::{tcl::literal_text, SyntaxNode, SyntaxTree};
use super::{GraphNode, Language, NodeId, NodeKind, Span};

/// Everything one file contributes before cross-file resolution.
#[derive(Clone, Debug)]
pub(crate) struct FileExtract {
    pub file: GraphNode,
    pub entities: Vec<GraphNode>,
    /// `(definition, callsite)` pairs: the callsite lies in the definition's body.
    pub enclosed: Vec<(NodeId, NodeId)>,
    pub includes: Vec<IncludeDirective>,
    pub imports: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct IncludeDirective {
    pub target: String,
    pub system: bool,
}

/// Tcl commands that never name repository procedures.
const TCL_BUILTINS: &[&str] = &[
    "after",
    "append",
    "apply",
    "array",
    "break",
    "catch",
    "cd",
    "close",
    "concat",
    "continue",
    "dict",
    "else",
    "elseif",
    "encoding",
    "eof",
    "error",
    "eval",
    "exec",
    "exit",
    "expr",
    "fconfigure",
    "file",
    "flush",
    "for",
    "foreach",
    "format",
    "gets",
    "glob",
    "global",
    "if",
    "incr",
    "info",
    "join",
    "lappend",
    "lassign",
    "lindex",
    "linsert",
    "list",
    "llength",
    "lmap",
    "lrange",
    "lrepeat",
    "lreplace",
    "lreverse",
    "lsearch",
    "lset",
    "lsort",
    "namespace",
    "open",
    "package",
    "proc",
    "puts",
    "pwd",
    "read",
    "regexp",
    "regsub",
    "rename",
    "return",
    "scan",
    "seek",
    "set",
    "source",
    "split",
    "string",
    "subst",
    "switch",
    "tell",
    "throw",
    "time",
    "trace",
    "try",
    "unset",
    "uplevel",
    "upvar",
    "variable",
    "vwait",
    "while",
];

pub(crate) fn extract(path: &str, tree: &SyntaxTree) -> FileExtract {
    let file = GraphNode::new(NodeKind::File, tree.language, path, Span::new(0, tree.source.len()), path, None);
    let mut cx = Cx {
        path,
        src: &tree.source,
        language: tree.language,
        scope: Vec::new(),
        out: FileExtract {
            file,
            entities: Vec::new(),
            enclosed: Vec::new(),
            includes: Vec::new(),
            imports: Vec::new(),
        },
    };
    match tree.language {
        Language::C | Language::Cpp => cx.cpp(&tree.root, None),
        Language::Python => cx.python(&tree.root, None),
        Language::Tcl => cx.tcl(&tree.root, None),
        Language::Verilog => cx.verilog(&tree.root),
        Language::Other => {}
    }
    let mut out = cx.out;
    // Zero-width and repeated constructs can collide; keep the first.
    let mut seen = std::collections::BTreeSet::new();
    out.entities.retain(|n| seen.insert(n.id));
    out
}

struct Cx<'a> {
    path: &'a str,
    src: &'a str,
    language: Language,
    scope: Vec<String>,
    out: FileExtract,
}

/// Collapses runs of whitespace to single spaces.
pub(crate) fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl<'a> Cx<'a> {
    fn text(&self, node: &SyntaxNode) -> &'a str {
        &self.src[node.span.start..node.span.end]
    }

    fn qualify(&self, name: &str, sep: &str) -> String {
        if self.scope.is_empty() {
            name.to_string()
        } else {
            format!("{}{}{}", self.scope.join(sep), sep, name)
        }
    }

    fn emit(&mut self, kind: NodeKind, span: Span, qname: &str, sig: Option<String>) -> NodeId {
        let node = GraphNode::new(kind, self.language, self.path, span, qname, sig);
        let id = node.id;
        self.out.entities.push(node);
        id
    }

    fn emit_call(&mut self, span: Span, callee: &str, args: Option<String>, enclosing: Option<NodeId>) {
        let id = self.emit(NodeKind::Callsite, span, callee, args);
        if let Some(def) = enclosing {
            self.out.enclosed.push((def, id));
        }
    }

    // ---- C / C++ -------------------------------------------------------

    fn cpp(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        match node.kind.as_str() {
            "namespace_definition" => {
                let name = node.child_by_field("name").map(|n| self.text(n).to_string());
                if let Some(name) = &name {
                    self.scope.push(name.clone());
                }
                if let Some(body) = node.child_by_field("body") {
                    self.cpp(body, enclosing);
                }
                if name.is_some() {
                    self.scope.pop();
                }
            }
            "class_specifier" | "struct_specifier" | "union_specifier" => {
                let (Some(name), Some(body)) = (node.child_by_field("name"), node.child_by_field("body")) else {
                    self.cpp_children(node, enclosing);
                    return;
                };
                let name = self.text(name).to_string();
                let qname = self.qualify(&name, "::");
                let keyword = node.kind.trim_end_matches("_specifier");
                self.emit(NodeKind::Declaration, node.span, &qname, Some(format!("{} {}", keyword, qname)));
                self.scope.push(name);
                self.cpp(body, enclosing);
                self.scope.pop();
            }
            "function_definition" => {
                let Some(fd) = node.child_by_field("declarator").and_then(function_declarator) else {
                    self.cpp_children(node, enclosing);
                    return;
                };
                let Some(name) = fd.child_by_field("declarator") else {
                    self.cpp_children(node, enclosing);
                    return;
                };
                let qname = self.qualify(&collapse_ws(self.text(name)), "::");
                let sig_end = node.child_by_field("body").map(|b| b.span.start).unwrap_or(node.span.end);
                let sig = collapse_ws(&self.src[node.span.start..sig_end]);
                let id = self.emit(NodeKind::Definition, node.span, &qname, Some(sig));
                for child in &node.children {
                    if child.field.as_deref() != Some("declarator") {
                        self.cpp(child, Some(id));
                    }
                }
            }
            "declaration" | "field_declaration" => {
                let proto = node
                    .child_by_field("declarator")
                    .and_then(function_declarator)
                    .and_then(|fd| fd.child_by_field("declarator"));
                match proto {
                    Some(name) if enclosing.is_none() => {
                        let qname = self.qualify(&collapse_ws(self.text(name)), "::");
                        let sig = collapse_ws(self.text(node).trim_end_matches(';'));
                        self.emit(NodeKind::Declaration, node.span, &qname, Some(sig));
                    }
                    _ => self.cpp_children(node, enclosing),
                }
            }
            "call_expression" => {
                let callee = node.child_by_field("function").and_then(|f| self.cpp_callee(f));
                if let Some(callee) = callee {
                    let args = node.child_by_field("arguments").map(|a| collapse_ws(self.text(a)));
                    self.emit_call(node.span, &callee, args, enclosing);
                }
                self.cpp_children(node, enclosing);
            }
            "preproc_include" => {
                if let Some(p) = node.child_by_field("path") {
                    let raw = self.text(p).trim();
                    let system = raw.starts_with('<');
                    let target = raw.trim_matches(|c| c == '"' || c == '<' || c == '>');
                    self.out.includes.push(IncludeDirective { target: target.to_string(), system });
                }
            }
            _ => self.cpp_children(node, enclosing),
        }
    }

    fn cpp_children(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        for child in &node.children {
            self.cpp(child, enclosing);
        }
    }

    fn cpp_callee(&self, f: &SyntaxNode) -> Option<String> {
        match f.kind.as_str() {
            "identifier" | "qualified_identifier" | "field_identifier" => {
                Some(strip_template_args(&collapse_ws(self.text(f))))
            }
            "field_expression" => f.child_by_field("field").map(|n| collapse_ws(self.text(n))),
            "template_function" => f.child_by_field("name").and_then(|n| self.cpp_callee(n)),
            _ => None,
        }
    }

    // ---- Python --------------------------------------------------------

    fn python(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        match node.kind.as_str() {
            "class_definition" => {
                let Some(name) = node.child_by_field("name") else {
                    return self.python_children(node, enclosing);
                };
                let name = self.text(name).to_string();
                let qname = self.qualify(&name, ".");
                let sig_end = node.child_by_field("body").map(|b| b.span.start).unwrap_or(node.span.end);
                let sig = collapse_ws(self.src[node.span.start..sig_end].trim_end().trim_end_matches(':'));
                self.emit(NodeKind::Declaration, node.span, &qname, Some(sig));
                self.scope.push(name);
                if let Some(body) = node.child_by_field("body") {
                    self.python(body, enclosing);
                }
                self.scope.pop();
            }
            "function_definition" => {
                let Some(name) = node.child_by_field("name") else {
                    return self.python_children(node, enclosing);
                };
                let qname = self.qualify(self.text(name), ".");
                let sig_end = node.child_by_field("body").map(|b| b.span.start).unwrap_or(node.span.end);
                let sig = collapse_ws(self.src[node.span.start..sig_end].trim_end().trim_end_matches(':'));
                let id = self.emit(NodeKind::Definition, node.span, &qname, Some(sig));
                if let Some(params) = node.child_by_field("parameters") {
                    self.python(params, Some(id));
                }
                if let Some(body) = node.child_by_field("body") {
                    self.python(body, Some(id));
                }
            }
            "call" => {
                let callee = node.child_by_field("function").and_then(|f| match f.kind.as_str() {
                    "identifier" => Some(self.text(f).to_string()),
                    "attribute" => f.child_by_field("attribute").map(|a| self.text(a).to_string()),
                    _ => None,
                });
                if let Some(callee) = callee {
                    let args = node.child_by_field("arguments").map(|a| collapse_ws(self.text(a)));
                    self.emit_call(node.span, &callee, args, enclosing);
                }
                self.python_children(node, enclosing);
            }
            "import_statement" => {
                for child in &node.children {
                    let target = match child.kind.as_str() {
                        "dotted_name" => Some(child),
                        "aliased_import" => child.child_by_field("name"),
                        _ => None,
                    };
                    if let Some(t) = target {
                        self.out.imports.push(self.text(t).to_string());
                    }
                }
            }
            "import_from_statement" => {
                if let Some(m) = node.child_by_field("module_name") {
                    self.out.imports.push(self.text(m).to_string());
                }
            }
            _ => self.python_children(node, enclosing),
        }
    }

    fn python_children(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        for child in &node.children {
            self.python(child, enclosing);
        }
    }

    // ---- Tcl -----------------------------------------------------------

    fn tcl(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        match node.kind.as_str() {
            "procedure" => {
                let name = node.child_by_field("name").and_then(|w| literal_text(w, self.src.as_bytes()));
                let Some(name) = name else {
                    return self.tcl_children(node, enclosing);
                };
                let qname = if name.starts_with("::") || name.contains("::") {
                    name.trim_start_matches("::").to_string()
                } else {
                    self.qualify(&name, "::")
                };
                let sig_end = node.child_by_field("parameters").map(|p| p.span.end).unwrap_or(node.span.end);
                let sig = collapse_ws(&self.src[node.span.start..sig_end]);
                let id = self.emit(NodeKind::Definition, node.span, &qname, Some(sig));
                if let Some(body) = node.child_by_field("body") {
                    self.tcl(body, Some(id));
                }
            }
            "namespace_eval" => {
                let name = node.child_by_field("name").and_then(|w| literal_text(w, self.src.as_bytes()));
                let pushed = name.map(|n| {
                    self.scope.push(n.trim_start_matches("::").to_string());
                });
                if let Some(body) = node.child_by_field("body") {
                    self.tcl(body, enclosing);
                }
                if pushed.is_some() {
                    self.scope.pop();
                }
            }
            "command" => {
                let name = literal_text(&node.children[0], self.src.as_bytes());
                if let Some(name) = name {
                    let bare = name.trim_start_matches("::");
                    if bare == "source" {
                        if let Some(arg) = node.children.get(1).and_then(|w| literal_text(w, self.src.as_bytes())) {
                            self.out.imports.push(arg);
                        }
                    } else if !bare.is_empty() && !TCL_BUILTINS.contains(&bare) {
                        let sig = tcl_command_text(node, self.src);
                        self.emit_call(node.span, bare, Some(sig), enclosing);
                    }
                }
                self.tcl_children(node, enclosing);
            }
            _ => self.tcl_children(node, enclosing),
        }
    }

    fn tcl_children(&mut self, node: &SyntaxNode, enclosing: Option<NodeId>) {
        for child in &node.children {
            self.tcl(child, enclosing);
        }
    }

    // ---- Verilog -------------------------------------------------------

    fn verilog(&mut self, node: &SyntaxNode) {
        if node.kind == "module_declaration" {
            let name = node
                .find_first("module_header")
                .and_then(|h| h.find_first("simple_identifier"))
                .map(|n| self.text(n).to_string());
            if let Some(name) = name {
                self.emit(NodeKind::Declaration, node.span, &name, Some(format!("module {}", name)));
            }
            return;
        }
        for child in &node.children {
            self.verilog(child);
        }
    }
}

/// Unwraps pointer/reference declarators down to a `function_declarator`.
fn function_declarator(node: &SyntaxNode) -> Option<&SyntaxNode> {
    match node.kind.as_str() {
        "function_declarator" => Some(node),
        "pointer_declarator" | "reference_declarator" | "parenthesized_declarator" | "attributed_declarator" => {
            node.children.iter().find_map(function_declarator)
        }
        _ => None,
    }
}

fn strip_template_args(name: &str) -> String {
    match name.find('<') {
        Some(i) => name[..i].to_string(),
        None => name.to_string(),
    }
}

/// Command words with long braced bodies elided.
fn tcl_command_text(cmd: &SyntaxNode, src: &str) -> String {
    let words: Vec<String> = cmd
        .children
        .iter()
        .map(|w| {
            let t = &src[w.span.start..w.span.end];
            if w.kind == "braced_word" && t.contains('\n') {
                "{...}".to_string()
            } else {
                collapse_ws(t)
            }
        })
        .collect();
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegraph::parse::parse_source;

    fn run(path: &str, lang: Language, src: &str) -> FileExtract {
        extract(path, &parse_source(src.as_bytes(), lang).unwrap())
    }

    fn names(x: &FileExtract, kind: NodeKind) -> Vec<String> {
        x.entities.iter().filter(|n| n.kind == kind).map(|n| n.qualified_name.clone()).collect()
    }

    #[test]
    fn cpp_entities() {
        let src = r#"#include "util.h"
#include <vector>
namespace dpl {
class Opendp {
 public:
  void place(int k = 8);
  int helper() { return 1; }
};
void Opendp::place(int k) { helper(); this->helper(); std::sort(a, b); }
}
int free_fn(int x);
"#;
        let x = run("src/opendp.cc", Language::Cpp, src);
        assert_eq!(
            x.includes,
            vec![
                IncludeDirective { target: "util.h".into(), system: false },
                IncludeDirective { target: "vector".into(), system: true },
            ]
        );
        let defs = names(&x, NodeKind::Definition);
        assert_eq!(defs, vec!["dpl::Opendp::helper", "dpl::Opendp::place"]);
        let decls = names(&x, NodeKind::Declaration);
        assert_eq!(decls, vec!["dpl::Opendp", "dpl::Opendp::place", "free_fn"]);
        let calls = names(&x, NodeKind::Callsite);
        assert_eq!(calls, vec!["helper", "helper", "std::sort"]);
        // All three calls are inside Opendp::place.
        let place = x
            .entities
            .iter()
            .find(|n| n.kind == NodeKind::Definition && n.qualified_name == "dpl::Opendp::place")
            .unwrap();
        assert_eq!(x.enclosed.iter().filter(|(d, _)| *d == place.id).count(), 3);
        assert_eq!(place.signature.as_deref(), Some("void Opendp::place(int k)"));
    }

    #[test]
    fn cpp_call_arguments_recorded() {
        let x = run("a.cc", Language::Cpp, "void init() { register_cmd(\"detailed_place\", dpMain); }");
        let call = x.entities.iter().find(|n| n.kind == NodeKind::Callsite).unwrap();
        assert_eq!(call.qualified_name, "register_cmd");
        assert_eq!(call.signature.as_deref(), Some("(\"detailed_place\", dpMain)"));
    }

    #[test]
    fn tcl_procs_and_callsites() {
        let src = "namespace eval gpl {\n  proc gp_opt {{density 0.7}} {\n    global_placement -density $density\n    set x [detailed_place]\n    puts done\n  }\n}\ngpl::gp_opt\nsource helpers.tcl\n";
        let x = run("scripts/gpl.tcl", Language::Tcl, src);
        assert_eq!(names(&x, NodeKind::Definition), vec!["gpl::gp_opt"]);
        assert_eq!(names(&x, NodeKind::Callsite), vec!["global_placement", "detailed_place", "gpl::gp_opt"]);
        assert_eq!(x.enclosed.len(), 2);
        assert_eq!(x.imports, vec!["helpers.tcl"]);
        let def = x.entities.iter().find(|n| n.kind == NodeKind::Definition).unwrap();
        assert_eq!(def.signature.as_deref(), Some("proc gp_opt {{density 0.7}}"));
    }

    #[test]
    fn python_entities() {
        let src = "import os\nfrom pkg.util import helper\nclass Runner:\n    def run(self, k=8):\n        helper(k)\n        self.stop()\n";
        let x = run("tools/run.py", Language::Python, src);
        assert_eq!(names(&x, NodeKind::Declaration), vec!["Runner"]);
        assert_eq!(names(&x, NodeKind::Definition), vec!["Runner.run"]);
        assert_eq!(names(&x, NodeKind::Callsite), vec!["helper", "stop"]);
        assert_eq!(x.imports, vec!["os", "pkg.util"]);
    }

    #[test]
    fn verilog_modules_only() {
        let x =
            run("designs/top.v", Language::Verilog, "module top(input a, output b);\n  sub u0(.a(a));\nendmodule\n");
        assert_eq!(names(&x, NodeKind::Declaration), vec!["top"]);
        assert!(names(&x, NodeKind::Callsite).is_empty());
        assert!(names(&x, NodeKind::Definition).is_empty());
    }
}
