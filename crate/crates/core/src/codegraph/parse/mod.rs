//! Concrete-syntax parsing into an owned, language-neutral tree.
//!
//! C, C++, Python and Verilog go through tree-sitter grammars; Tcl uses the
//! hand-written parser in [`tcl`]. Either way the result is a [`SyntaxTree`]
//! whose nodes carry a kind name, a byte span and an optional field name.

pub mod tcl;

use super::{GraphError, Language, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: String,
    pub span: Span,
    /// Field name under the parent, when the grammar assigns one.
    pub field: Option<String>,
    pub is_error: bool,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn new(kind: &str, span: Span) -> Self {
        SyntaxNode { kind: kind.to_string(), span, field: None, is_error: false, children: Vec::new() }
    }

    pub fn with_field(mut self, field: &str) -> Self {
        self.field = Some(field.to_string());
        self
    }

    pub fn child_by_field(&self, field: &str) -> Option<&SyntaxNode> {
        self.children.iter().find(|c| c.field.as_deref() == Some(field))
    }

    pub fn children_of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a SyntaxNode> {
        self.children.iter().filter(move |c| c.kind == kind)
    }

    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        &source[self.span.start..self.span.end]
    }

    /// Pre-order search for the first descendant (or self) of `kind`.
    pub fn find_first(&self, kind: &str) -> Option<&SyntaxNode> {
        if self.kind == kind {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find_first(kind))
    }

    pub fn has_error(&self) -> bool {
        self.is_error || self.children.iter().any(SyntaxNode::has_error)
    }

    /// Number of nodes in this subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SyntaxNode::size).sum::<usize>()
    }
}

/// Parsed source file. Opaque apart from the traversal API.
#[derive(Clone, Debug)]
pub struct SyntaxTree {
    pub language: Language,
    pub source: String,
    pub root: SyntaxNode,
}

impl SyntaxTree {
    pub fn root(&self) -> &SyntaxNode {
        &self.root
    }
}

/// Parses `bytes` as `language`.
///
/// Syntax errors produce error-marked subtrees; only undecodable input or an
/// unsupported language fail.
pub fn parse_source(bytes: &[u8], language: Language) -> Result<SyntaxTree, GraphError> {
    let source = std::str::from_utf8(bytes).map_err(|e| GraphError::UndecodableBytes(e.valid_up_to()))?.to_string();
    let root = match language {
        Language::Tcl => tcl::parse_script(&source),
        Language::C => ts_parse(&source, tree_sitter_c::LANGUAGE.into())?,
        Language::Cpp => ts_parse(&source, tree_sitter_cpp::LANGUAGE.into())?,
        Language::Python => ts_parse(&source, tree_sitter_python::LANGUAGE.into())?,
        Language::Verilog => ts_parse(&source, tree_sitter_verilog::LANGUAGE.into())?,
        Language::Other => return Err(GraphError::UnsupportedLanguage(language)),
    };
    Ok(SyntaxTree { language, source, root })
}

fn ts_parse(source: &str, language: tree_sitter::Language) -> Result<SyntaxNode, GraphError> {
    let mut parser = tree_sitter::Parser::new();
    parser.set_language(&language).map_err(|e| GraphError::Parser(e.to_string()))?;
    let tree = parser.parse(source, None).ok_or_else(|| GraphError::Parser("parser returned no tree".into()))?;
    Ok(convert(tree.walk()))
}

/// Copies the named nodes of a tree-sitter tree into owned [`SyntaxNode`]s.
/// Anonymous tokens are dropped. Iterative so deep trees cannot overflow.
fn convert(mut cursor: tree_sitter::TreeCursor<'_>) -> SyntaxNode {
    fn make(node: tree_sitter::Node<'_>, field: Option<&str>) -> (SyntaxNode, bool) {
        let owned = SyntaxNode {
            kind: node.kind().to_string(),
            span: Span::new(node.start_byte(), node.end_byte()),
            field: field.map(str::to_string),
            is_error: node.is_error() || node.is_missing(),
            children: Vec::new(),
        };
        (owned, node.is_named() || node.is_error() || node.is_missing())
    }

    let mut stack: Vec<(SyntaxNode, bool)> = vec![make(cursor.node(), None)];
    loop {
        if cursor.goto_first_child() {
            stack.push(make(cursor.node(), cursor.field_name()));
            continue;
        }
        loop {
            let done = stack.pop().expect("stack holds current node");
            if cursor.goto_next_sibling() {
                attach(&mut stack.last_mut().expect("parent").0, done);
                stack.push(make(cursor.node(), cursor.field_name()));
                break;
            }
            if !cursor.goto_parent() {
                return done.0;
            }
            attach(&mut stack.last_mut().expect("parent").0, done);
        }
    }
}

fn attach(parent: &mut SyntaxNode, (child, named): (SyntaxNode, bool)) {
    if named {
        parent.children.push(child);
    } else {
        parent.children.extend(child.children);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpp_function_definition_spans_input() {
        let src = "int f(){return 0;}";
        let tree = parse_source(src.as_bytes(), Language::Cpp).unwrap();
        assert_eq!(tree.root.kind, "translation_unit");
        assert_eq!(tree.root.children.len(), 1);
        let def = &tree.root.children[0];
        assert_eq!(def.kind, "function_definition");
        assert_eq!(def.span, Span::new(0, src.len()));
        let decl = def.child_by_field("declarator").unwrap();
        assert_eq!(decl.kind, "function_declarator");
        assert_eq!(decl.child_by_field("declarator").unwrap().text(src), "f");
        assert!(def.child_by_field("body").is_some());
        assert!(!tree.root.has_error());
    }

    #[test]
    fn empty_tcl_has_no_children() {
        let tree = parse_source(b"", Language::Tcl).unwrap();
        assert_eq!(tree.root.kind, "script");
        assert!(tree.root.children.is_empty());
    }

    #[test]
    fn broken_cpp_yields_error_subtree() {
        let tree = parse_source(b"int f( { return; ", Language::Cpp).unwrap();
        assert!(tree.root.has_error());
    }

    #[test]
    fn invalid_utf8_rejected() {
        let err = parse_source(&[0x66, 0xff, 0xfe], Language::Cpp).unwrap_err();
        assert!(matches!(err, GraphError::UndecodableBytes(1)));
    }

    #[test]
    fn other_language_unsupported() {
        assert!(matches!(parse_source(b"x", Language::Other), Err(GraphError::UnsupportedLanguage(Language::Other))));
    }

    #[test]
    fn python_and_verilog_parse() {
        let py = parse_source(b"def f(a, k=8):\n    return a\n", Language::Python).unwrap();
        assert_eq!(py.root.children[0].kind, "function_definition");
        let v = parse_source(b"module top(input a); endmodule\n", Language::Verilog).unwrap();
        assert!(v.root.find_first("module_declaration").is_some());
    }
}
