//! Tcl concrete-syntax parser.
//!
//! Follows the Tcl dodekalogue word rules: commands end at an unquoted newline
//! or semicolon, `{...}` quotes literally with nesting, `"..."` and bare words
//! allow `[...]` command substitution, `#` starts a comment only where a
//! command could start. Braced words are left opaque except where a known
//! command takes them as a script or expression (`proc`, `namespace eval`,
//! `if`, `while`, `for`, `foreach`, `catch`, `expr`); those are parsed in
//! place and attached as children, so procedure bodies appear in the tree.
//!
//! Node kinds: `script`, `comment`, `command`, `procedure`, `namespace_eval`,
//! `bare_word`, `quoted_word`, `braced_word`, `command_substitution`.

use super::SyntaxNode;
use crate::codegraph::Span;

pub fn parse_script(source: &str) -> SyntaxNode {
    Parser { src: source.as_bytes() }.script(0, source.len())
}

struct Parser<'a> {
    src: &'a [u8],
}

impl<'a> Parser<'a> {
    fn script(&self, start: usize, end: usize) -> SyntaxNode {
        let mut node = SyntaxNode::new("script", Span::new(start, end));
        let mut pos = start;
        loop {
            pos = self.skip_command_separators(pos, end);
            if pos >= end {
                break;
            }
            if self.src[pos] == b'#' {
                let stop = self.comment_end(pos, end);
                node.children.push(SyntaxNode::new("comment", Span::new(pos, stop)));
                pos = stop;
                continue;
            }
            let (cmd, next) = self.command(pos, end);
            if let Some(cmd) = cmd {
                node.children.push(cmd);
            }
            pos = next;
        }
        node
    }

    fn skip_command_separators(&self, mut pos: usize, end: usize) -> usize {
        while pos < end {
            match self.src[pos] {
                b' ' | b'\t' | b'\r' | b'\n' | b';' => pos += 1,
                b'\\' if pos + 1 < end && self.src[pos + 1] == b'\n' => pos += 2,
                _ => break,
            }
        }
        pos
    }

    fn skip_word_space(&self, mut pos: usize, end: usize) -> usize {
        while pos < end {
            match self.src[pos] {
                b' ' | b'\t' | b'\r' => pos += 1,
                b'\\' if pos + 1 < end && self.src[pos + 1] == b'\n' => pos += 2,
                _ => break,
            }
        }
        pos
    }

    fn comment_end(&self, mut pos: usize, end: usize) -> usize {
        while pos < end {
            match self.src[pos] {
                b'\\' => pos += 2,
                b'\n' => return pos,
                _ => pos += 1,
            }
        }
        end
    }

    /// Parses one command starting at `pos`; returns it and the position just
    /// past its terminator.
    fn command(&self, start: usize, end: usize) -> (Option<SyntaxNode>, usize) {
        let mut words = Vec::new();
        let mut pos = start;
        loop {
            pos = self.skip_word_space(pos, end);
            if pos >= end || self.src[pos] == b'\n' || self.src[pos] == b';' {
                break;
            }
            let word = self.word(pos, end);
            pos = word.span.end;
            words.push(word);
        }
        if words.is_empty() {
            return (None, pos.max(start + 1));
        }
        let span = Span::new(words[0].span.start, words.last().unwrap().span.end);
        let mut cmd = SyntaxNode::new("command", span);
        cmd.children = words;
        self.classify(&mut cmd);
        (Some(cmd), pos)
    }

    fn word(&self, start: usize, end: usize) -> SyntaxNode {
        match self.src[start] {
            b'{' => {
                let (stop, closed) = self.match_brace(start, end);
                let mut node = SyntaxNode::new("braced_word", Span::new(start, stop));
                node.is_error = !closed;
                node
            }
            b'"' => {
                let mut node = SyntaxNode::new("quoted_word", Span::new(start, start));
                let mut pos = start + 1;
                let mut closed = false;
                while pos < end {
                    match self.src[pos] {
                        b'\\' => pos += 2,
                        b'[' => {
                            let sub = self.substitution(pos, end);
                            pos = sub.span.end;
                            node.children.push(sub);
                        }
                        b'"' => {
                            pos += 1;
                            closed = true;
                            break;
                        }
                        _ => pos += 1,
                    }
                }
                node.span = Span::new(start, pos.min(end));
                node.is_error = !closed;
                node
            }
            _ => {
                let mut node = SyntaxNode::new("bare_word", Span::new(start, start));
                let mut pos = start;
                while pos < end {
                    match self.src[pos] {
                        b' ' | b'\t' | b'\r' | b'\n' | b';' => break,
                        b'\\' => pos = (pos + 2).min(end),
                        b'[' => {
                            let sub = self.substitution(pos, end);
                            pos = sub.span.end;
                            node.children.push(sub);
                        }
                        _ => pos += 1,
                    }
                }
                node.span = Span::new(start, pos);
                node
            }
        }
    }

    /// `[ ... ]` starting at `start`; the nested script is its only child.
    fn substitution(&self, start: usize, end: usize) -> SyntaxNode {
        let (stop, closed) = self.match_bracket(start, end);
        let inner_end = if closed { stop - 1 } else { stop };
        let mut node = SyntaxNode::new("command_substitution", Span::new(start, stop));
        node.is_error = !closed;
        node.children.push(self.script(start + 1, inner_end));
        node
    }

    /// End (exclusive) of the braced word opening at `start`.
    fn match_brace(&self, start: usize, end: usize) -> (usize, bool) {
        let mut depth = 0usize;
        let mut pos = start;
        while pos < end {
            match self.src[pos] {
                b'\\' => pos += 1,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return (pos + 1, true);
                    }
                }
                _ => {}
            }
            pos += 1;
        }
        (end, false)
    }

    fn match_bracket(&self, start: usize, end: usize) -> (usize, bool) {
        let mut depth = 0usize;
        let mut pos = start;
        while pos < end {
            match self.src[pos] {
                b'\\' => pos += 1,
                b'{' => {
                    let (stop, _) = self.match_brace(pos, end);
                    pos = stop;
                    continue;
                }
                b'"' if depth > 0 => {
                    pos += 1;
                    while pos < end && self.src[pos] != b'"' {
                        if self.src[pos] == b'\\' {
                            pos += 1;
                        }
                        pos += 1;
                    }
                }
                b'[' => depth += 1,
                b']' => {
                    depth -= 1;
                    if depth == 0 {
                        return (pos + 1, true);
                    }
                }
                _ => {}
            }
            pos += 1;
        }
        (end, false)
    }

    fn literal(&self, word: &SyntaxNode) -> Option<String> {
        literal_text(word, self.src)
    }

    /// Assigns command kind and field names, and parses body/expression words
    /// of known control commands.
    fn classify(&self, cmd: &mut SyntaxNode) {
        let name = self.literal(&cmd.children[0]).unwrap_or_default();
        let name = name.trim_start_matches("::");
        let n = cmd.children.len();
        cmd.children[0].field = Some("name".into());
        match name {
            "proc" if n == 4 => {
                cmd.kind = "procedure".into();
                cmd.children[0].field = Some("keyword".into());
                cmd.children[1].field = Some("name".into());
                cmd.children[2].field = Some("parameters".into());
                self.as_script(&mut cmd.children[3], "body");
            }
            "namespace" if n == 4 && self.literal(&cmd.children[1]).as_deref() == Some("eval") => {
                cmd.kind = "namespace_eval".into();
                cmd.children[0].field = Some("keyword".into());
                cmd.children[2].field = Some("name".into());
                self.as_script(&mut cmd.children[3], "body");
            }
            "if" => {
                let mut i = 1;
                while i < n {
                    self.as_expr(&mut cmd.children[i]);
                    i += 1;
                    if i < n && self.literal(&cmd.children[i]).as_deref() == Some("then") {
                        i += 1;
                    }
                    if i < n {
                        self.as_script(&mut cmd.children[i], "body");
                        i += 1;
                    }
                    match self.literal_at(cmd, i).as_deref() {
                        Some("elseif") => i += 1,
                        Some("else") => {
                            if i + 1 < n {
                                self.as_script(&mut cmd.children[i + 1], "body");
                            }
                            break;
                        }
                        _ => break,
                    }
                }
            }
            "while" if n == 3 => {
                self.as_expr(&mut cmd.children[1]);
                self.as_script(&mut cmd.children[2], "body");
            }
            "for" if n == 5 => {
                self.as_script(&mut cmd.children[1], "init");
                self.as_expr(&mut cmd.children[2]);
                self.as_script(&mut cmd.children[3], "next");
                self.as_script(&mut cmd.children[4], "body");
            }
            "foreach" | "dict" | "time" if n >= 3 => {
                self.as_script(&mut cmd.children[n - 1], "body");
            }
            "catch" if n >= 2 => self.as_script(&mut cmd.children[1], "body"),
            "expr" => {
                for w in cmd.children.iter_mut().skip(1) {
                    self.as_expr(w);
                }
            }
            _ => {}
        }
    }

    fn literal_at(&self, cmd: &SyntaxNode, i: usize) -> Option<String> {
        cmd.children.get(i).and_then(|w| self.literal(w))
    }

    fn as_script(&self, word: &mut SyntaxNode, field: &str) {
        word.field = Some(field.into());
        if word.kind == "braced_word" && !word.is_error {
            word.children = vec![self.script(word.span.start + 1, word.span.end - 1)];
        }
    }

    /// Expressions only contribute their `[...]` substitutions.
    fn as_expr(&self, word: &mut SyntaxNode) {
        word.field = Some("condition".into());
        if word.kind != "braced_word" || word.is_error {
            return;
        }
        let (start, end) = (word.span.start + 1, word.span.end - 1);
        let mut pos = start;
        while pos < end {
            match self.src[pos] {
                b'\\' => pos += 2,
                b'[' => {
                    let sub = self.substitution(pos, end);
                    pos = sub.span.end;
                    word.children.push(sub);
                }
                _ => pos += 1,
            }
        }
    }
}

/// Literal value of a word when it contains no substitutions: braces and
/// quotes are stripped, `$`-variables make the word non-literal.
pub fn literal_text(word: &SyntaxNode, src: &[u8]) -> Option<String> {
    let raw = std::str::from_utf8(&src[word.span.start..word.span.end]).ok()?;
    match word.kind.as_str() {
        "braced_word" if !word.is_error => Some(raw[1..raw.len() - 1].to_string()),
        "quoted_word" if word.children.is_empty() && !word.is_error => {
            let inner = &raw[1..raw.len() - 1];
            (!inner.contains('$')).then(|| inner.to_string())
        }
        "bare_word" if word.children.is_empty() => (!raw.contains('$')).then(|| raw.to_string()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(node: &SyntaxNode) -> Vec<&str> {
        node.children.iter().map(|c| c.kind.as_str()).collect()
    }

    #[test]
    fn proc_becomes_procedure_with_parsed_body() {
        let src = "proc gp_opt {} {\n  global_placement -density 0.7\n}\n";
        let root = parse_script(src);
        assert_eq!(kinds(&root), vec!["procedure"]);
        let proc_node = &root.children[0];
        assert_eq!(proc_node.child_by_field("name").unwrap().text(src), "gp_opt");
        let body = proc_node.child_by_field("body").unwrap();
        let inner = &body.children[0];
        assert_eq!(inner.kind, "script");
        assert_eq!(inner.children.len(), 1);
        assert_eq!(inner.children[0].children[0].text(src), "global_placement");
    }

    #[test]
    fn commands_split_on_newline_and_semicolon() {
        let root = parse_script("a 1; b 2\nc {x y\n z}\n");
        assert_eq!(root.children.len(), 3);
        assert_eq!(root.children[2].children[1].kind, "braced_word");
    }

    #[test]
    fn comments_only_at_command_start() {
        let src = "# leading\nputs #notcomment\n";
        let root = parse_script(src);
        assert_eq!(kinds(&root), vec!["comment", "command"]);
        assert_eq!(root.children[1].children[1].text(src), "#notcomment");
    }

    #[test]
    fn command_substitution_nests_a_script() {
        let src = "set x [detailed_place -max 3]\n";
        let root = parse_script(src);
        let word = &root.children[0].children[2];
        assert_eq!(word.kind, "bare_word");
        let sub = &word.children[0];
        assert_eq!(sub.kind, "command_substitution");
        assert_eq!(sub.children[0].children[0].children[0].text(src), "detailed_place");
    }

    #[test]
    fn unterminated_brace_is_error_not_failure() {
        let root = parse_script("proc f {} {\n  puts hi\n");
        assert!(root.has_error());
    }

    #[test]
    fn if_bodies_parsed_conditions_only_substitutions() {
        let src = "if {[info exists k]} {\n  run_a\n} else {\n  run_b\n}\n";
        let root = parse_script(src);
        let cmd = &root.children[0];
        let bodies: Vec<_> = cmd.children.iter().filter(|w| w.field.as_deref() == Some("body")).collect();
        assert_eq!(bodies.len(), 2);
        let cond = &cmd.children[1];
        assert_eq!(cond.children[0].kind, "command_substitution");
    }

    #[test]
    fn literal_words() {
        let src = "cmd {a b} \"q\" bare $v \"x$y\"";
        let root = parse_script(src);
        let words = &root.children[0].children;
        let lits: Vec<_> = words.iter().map(|w| literal_text(w, src.as_bytes())).collect();
        assert_eq!(
            lits,
            vec![Some("cmd".into()), Some("a b".into()), Some("q".into()), Some("bare".into()), None, None]
        );
    }

    #[test]
    fn namespace_eval_body_parsed() {
        let src = "namespace eval dpl {\n  proc helper {} { return 1 }\n}\n";
        let root = parse_script(src);
        let ns = &root.children[0];
        assert_eq!(ns.kind, "namespace_eval");
        assert_eq!(ns.child_by_field("name").unwrap().text(src), "dpl");
        let body = &ns.child_by_field("body").unwrap().children[0];
        assert_eq!(body.children[0].kind, "procedure");
    }
}
