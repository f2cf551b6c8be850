use std::collections::HashSet;

use thiserror::Error;

use super::Library;
use crate::frontend::{Loc, Program, Successor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckIssue {
    #[error("successor `{0}` has no rule in its rules block")]
    DanglingSuccessor(String),
    #[error("successor `{0}()` names no method or imported grammar")]
    UnknownMethod(String),
    #[error("import `{0}` cannot be resolved")]
    UnresolvedImport(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{grammar}.psm:{loc}: {issue}")]
pub struct Diagnostic {
    pub grammar: String,
    pub loc: Loc,
    pub issue: CheckIssue,
}

/// Static validation without derivation: every symbol successor must be the
/// predecessor of some rule in the same block, every method successor must
/// resolve, and every import must be present in `lib`.
pub fn check_program(entry: &Program, lib: &Library) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |loc, issue| Diagnostic { grammar: entry.name.clone(), loc, issue };
    for import in &entry.imports {
        let stem = import.rsplit('.').next().unwrap_or(import);
        if lib.program(import).is_none() && lib.program(stem).is_none() {
            out.push(diag(entry.loc, CheckIssue::UnresolvedImport(import.clone())));
        }
    }
    let methods: HashSet<&str> =
        entry.methods.iter().map(|m| m.name.as_str()).chain(lib.programs.keys().map(String::as_str)).collect();
    for method in &entry.methods {
        for block in method.rules_blocks() {
            let preds: HashSet<&str> = block.rules.iter().map(|r| r.predecessor.as_str()).collect();
            for rule in &block.rules {
                for s in &rule.successors {
                    match s {
                        Successor::Terminal(_) => {}
                        Successor::Symbol(name, loc) if !preds.contains(name.as_str()) => {
                            out.push(diag(*loc, CheckIssue::DanglingSuccessor(name.clone())));
                        }
                        Successor::Symbol(..) => {}
                        Successor::Method(call) if !methods.contains(call.name.as_str()) => {
                            out.push(diag(call.loc, CheckIssue::UnknownMethod(call.name.clone())));
                        }
                        Successor::Method(_) => {}
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn check(src: &str) -> Vec<CheckIssue> {
        check_program(&parse_program(src).unwrap(), &Library::new()).into_iter().map(|d| d.issue).collect()
    }

    #[test]
    fn reports_dangling_and_unknown_successors() {
        let src = "import Missing; public class G extends ShapeGrammar {
            public static void main(String[] args) { rules { a::split(x, {0.5, 0.5}){b, Door()}; } }
        }";
        assert_eq!(
            check(src),
            vec![
                CheckIssue::UnresolvedImport("Missing".into()),
                CheckIssue::DanglingSuccessor("b".into()),
                CheckIssue::UnknownMethod("Door".into()),
            ]
        );
    }

    #[test]
    fn clean_program_has_no_issues() {
        let src = "public class G extends ShapeGrammar {
            public G() { rules { x::{terminal}; } }
            public static void main(String[] args) { rules { a::{G()}; } }
        }";
        assert!(check(src).is_empty());
    }
}
