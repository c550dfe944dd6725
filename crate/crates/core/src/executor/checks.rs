//! Pre-flight checks run against a workspace before any flow.

use std::collections::BTreeMap;
use std::path::Path;

use tracing::debug;

use crate::codegraph::{parse_source, scan_repo, Language, SyntaxNode};
use crate::localizer::PreCheck;
use crate::process::run_shell;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub ok: bool,
    pub log: String,
}

impl CheckResult {
    pub fn pass() -> Self {
        CheckResult { ok: true, log: String::new() }
    }

    pub fn fail(log: impl Into<String>) -> Self {
        CheckResult { ok: false, log: log.into() }
    }
}

pub trait Checker: Send + Sync {
    fn check(&self, kind: PreCheck, workdir: &Path) -> CheckResult;
}

impl<F> Checker for F
where
    F: Fn(PreCheck, &Path) -> CheckResult + Send + Sync,
{
    fn check(&self, kind: PreCheck, workdir: &Path) -> CheckResult {
        self(kind, workdir)
    }
}

/// Runs one shell command per check kind in the workspace root. Kinds with
/// no command pass.
#[derive(Clone, Debug, Default)]
pub struct CommandChecker {
    pub commands: BTreeMap<PreCheck, String>,
}

impl Checker for CommandChecker {
    fn check(&self, kind: PreCheck, workdir: &Path) -> CheckResult {
        let Some(cmd) = self.commands.get(&kind) else {
            debug!(?kind, "no command configured; check passes");
            return CheckResult::pass();
        };
        match run_shell(cmd, b"", Some(workdir), &[]) {
            Ok(out) if out.code == Some(0) => CheckResult::pass(),
            Ok(out) => CheckResult::fail(format!("{}{}", out.stdout, out.stderr)),
            Err(e) => CheckResult::fail(e.to_string()),
        }
    }
}

/// Offline stand-in for a compiler: `Build` fails when any C, C++, Python
/// or Tcl file in the tree has a syntax error. Other kinds pass.
#[derive(Clone, Copy, Debug, Default)]
pub struct SyntaxChecker;

fn first_error(node: &SyntaxNode) -> Option<&SyntaxNode> {
    if node.is_error {
        return Some(node);
    }
    node.children.iter().find_map(first_error)
}

impl Checker for SyntaxChecker {
    fn check(&self, kind: PreCheck, workdir: &Path) -> CheckResult {
        if kind != PreCheck::Build {
            return CheckResult::pass();
        }
        let files = match scan_repo(workdir) {
            Ok(f) => f,
            Err(e) => return CheckResult::fail(e.to_string()),
        };
        let mut log = String::new();
        for (path, lang) in files {
            if lang == Language::Verilog {
                continue;
            }
            let Ok(bytes) = std::fs::read(workdir.join(&path)) else {
                log.push_str(&format!("{path}: unreadable\n"));
                continue;
            };
            match parse_source(&bytes, lang) {
                Ok(tree) => {
                    if let Some(err) = first_error(&tree.root) {
                        let line = tree.source[..err.span.start].matches('\n').count() + 1;
                        log.push_str(&format!(
                            "{path}:{line}: error: syntax error near `{}`\n",
                            snippet(err.text(&tree.source))
                        ));
                    }
                }
                Err(e) => log.push_str(&format!("{path}: {e}\n")),
            }
        }
        if log.is_empty() {
            CheckResult::pass()
        } else {
            CheckResult::fail(log)
        }
    }
}

fn snippet(text: &str) -> String {
    let line = text.lines().next().unwrap_or("").trim();
    line.chars().take(40).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_checker_flags_broken_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ok.cc"), "int f() { return 0; }\n").unwrap();
        assert!(SyntaxChecker.check(PreCheck::Build, dir.path()).ok);
        std::fs::write(dir.path().join("bad.cc"), "int g( { return; \n").unwrap();
        let r = SyntaxChecker.check(PreCheck::Build, dir.path());
        assert!(!r.ok);
        assert!(r.log.starts_with("bad.cc:1: error"));
        assert!(SyntaxChecker.check(PreCheck::UnitTests, dir.path()).ok);
    }

    #[test]
    fn command_checker_uses_exit_status() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = CommandChecker::default();
        c.commands.insert(PreCheck::Build, "echo compiling; exit 1".into());
        c.commands.insert(PreCheck::UnitTests, "true".into());
        let r = c.check(PreCheck::Build, dir.path());
        assert!(!r.ok && r.log.contains("compiling"));
        assert!(c.check(PreCheck::UnitTests, dir.path()).ok);
        assert!(c.check(PreCheck::Format, dir.path()).ok);
    }
}
