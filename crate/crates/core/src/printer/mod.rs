//! Reprinting trees as Dockerfile text, and unified diffs.
//!
//! Preserve mode copies the original bytes of every unmodified node and
//! only renders modified regions. Normalized mode renders everything,
//! one instruction per line.

mod canonical;

use crate::ast::{Ast, NodeId, NodeKind, Origin};
use crate::parser::fold;

pub use canonical::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrintMode {
    pub preserve_formatting: bool,
}

impl PrintMode {
    pub const PRESERVE: PrintMode = PrintMode {
        preserve_formatting: true,
    };
    pub const NORMALIZED: PrintMode = PrintMode {
        preserve_formatting: false,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrintError {
    #[error("node {node:?} ({kind:?}) at {start}..{end} no longer matches the source")]
    InconsistentSpans {
        node: NodeId,
        kind: NodeKind,
        start: usize,
        end: usize,
    },
}

pub fn print(ast: &Ast, mode: PrintMode) -> Result<String, PrintError> {
    if mode.preserve_formatting {
        let mut p = Preserver {
            ast,
            out: String::with_capacity(ast.source().len() + 64),
            descend: false,
        };
        p.node(ast.root())?;
        Ok(p.out)
    } else {
        Ok(canonical::document(ast))
    }
}

/// Preserve-mode print that walks every node down to the leaves instead of
/// copying unmodified subtrees whole. On a parsed tree the output equals
/// the source exactly when the node spans tile it consistently.
pub fn print_descending(ast: &Ast) -> Result<String, PrintError> {
    let mut p = Preserver {
        ast,
        out: String::with_capacity(ast.source().len()),
        descend: true,
    };
    p.node(ast.root())?;
    Ok(p.out)
}

fn inconsistent(ast: &Ast, id: NodeId) -> PrintError {
    let span = ast.span(id);
    PrintError::InconsistentSpans {
        node: id,
        kind: ast.kind(id),
        start: span.start_offset,
        end: span.end_offset,
    }
}

/// Bytes of the node's span, checked against the source bounds.
fn slice(ast: &Ast, id: NodeId) -> Result<&str, PrintError> {
    let span = ast.span(id);
    ast.source()
        .get(span.range())
        .ok_or_else(|| inconsistent(ast, id))
}

fn is_exec_element(ast: &Ast, id: NodeId) -> bool {
    ast.parent(id)
        .is_some_and(|p| ast.kind(p) == NodeKind::BashCommandArgs && ast.value(p) == Some("["))
}

/// Checks that the literal leaves of an unmodified subtree still slice to
/// their recorded values.
fn check_subtree(ast: &Ast, id: NodeId) -> Result<(), PrintError> {
    for n in ast.preorder(id) {
        if ast.kind(n) != NodeKind::BashLiteral || is_exec_element(ast, n) {
            continue;
        }
        let span = ast.span(n);
        let text = slice(ast, n)?;
        let folded = fold(ast.source(), span.start_offset, span.end_offset, ast.escape_char());
        if ast.value(n).unwrap_or("") != folded.text && ast.value(n) != Some(text) {
            return Err(inconsistent(ast, n));
        }
    }
    Ok(())
}

struct Preserver<'a> {
    ast: &'a Ast,
    out: String,
    descend: bool,
}

impl Preserver<'_> {
    fn node(&mut self, id: NodeId) -> Result<(), PrintError> {
        let ast = self.ast;
        match ast.origin(id) {
            Origin::Inserted | Origin::Replacing => {
                canonical::render_into(ast, id, &mut self.out);
                Ok(())
            }
            Origin::Source if !ast.is_modified(id) && !self.descend => {
                check_subtree(ast, id)?;
                self.out.push_str(slice(ast, id)?);
                Ok(())
            }
            Origin::Source => self.walk(id),
        }
    }

    /// Emits the node's own bytes between its children, minus removed
    /// ranges, with children printed in between.
    fn walk(&mut self, id: NodeId) -> Result<(), PrintError> {
        let ast = self.ast;
        let span = ast.span(id);
        let text = slice(ast, id)?;
        if ast.children(id).is_empty() {
            if self.descend {
                check_subtree(ast, id)?;
            }
            self.out.push_str(text);
            return Ok(());
        }
        let spaced = spaced_container(ast.kind(id));
        let mut pos = span.start_offset;
        let mut after_inserted = false;
        for (i, &c) in ast.children(id).iter().enumerate() {
            let cs = ast.span(c);
            if cs.start_offset < pos || cs.end_offset > span.end_offset {
                return Err(inconsistent(ast, c));
            }
            self.gap(id, pos, cs.start_offset);
            match ast.origin(c) {
                Origin::Inserted => {
                    let lead = ast.lead(c).unwrap_or(if i == 0 { "" } else { " " });
                    if after_inserted && lead.is_empty() && spaced {
                        self.out.push(' ');
                    }
                    self.out.push_str(lead);
                    canonical::render_into(ast, c, &mut self.out);
                    pos = cs.start_offset;
                    after_inserted = true;
                }
                _ => {
                    let before = self.out.len();
                    self.node(c)?;
                    if after_inserted && spaced && cs.start_offset == pos {
                        let first = self.out[before..].chars().next();
                        let last = self.out[..before].chars().last();
                        if first.is_some_and(|f| !f.is_whitespace() && f != ';')
                            && last.is_some_and(|l| !l.is_whitespace())
                        {
                            self.out.insert(before, ' ');
                        }
                    }
                    pos = cs.end_offset;
                    after_inserted = false;
                }
            }
        }
        self.gap(id, pos, span.end_offset);
        Ok(())
    }

    fn gap(&mut self, id: NodeId, from: usize, to: usize) {
        if from >= to {
            return;
        }
        let source = self.ast.source();
        let removed = self.ast.removed_ranges(id);
        let mut pos = from;
        while pos < to {
            match removed.iter().find(|(s, e)| *s <= pos && pos < *e) {
                Some(&(_, e)) => pos = e.min(to),
                None => {
                    let next = removed
                        .iter()
                        .map(|(s, _)| *s)
                        .filter(|s| *s > pos)
                        .min()
                        .unwrap_or(to)
                        .min(to);
                    self.out.push_str(&source[pos..next]);
                    pos = next;
                }
            }
        }
    }
}

fn spaced_container(kind: NodeKind) -> bool {
    kind.is_instruction()
        || matches!(
            kind,
            NodeKind::BashCommand | NodeKind::BashStatementList | NodeKind::BashFor
        )
}

/// Unified diff of two texts with `context_lines` lines of context. Empty
/// when the texts are equal.
pub fn diff(original: &str, repaired: &str, context_lines: usize) -> String {
    diff_named(original, repaired, context_lines, "a/Dockerfile", "b/Dockerfile")
}

/// [`diff`] with explicit file names in the `---`/`+++` header.
pub fn diff_named(
    original: &str,
    repaired: &str,
    context_lines: usize,
    old_name: &str,
    new_name: &str,
) -> String {
    if original == repaired {
        return String::new();
    }
    let mut options = diffy::DiffOptions::new();
    options.set_context_len(context_lines);
    let patch = options.create_patch(original, repaired).to_string();
    // the library names the sides `original` and `modified`
    let body = patch
        .strip_prefix("--- original\n+++ modified\n")
        .expect("patch header");
    let mut out = format!("--- {old_name}\n+++ {new_name}\n");
    for line in body.split_inclusive('\n') {
        // blank context lines come out without their leading space
        out.push_str(if line == "\n" { " \n" } else { line });
    }
    out
}
