//! Parsing of Dockerfiles (and their shell payloads) into the unified tree.

mod dockerfile;
pub mod fold;
mod raw;
mod shell;

use serde::Serialize;

use crate::ast::{Ast, NodeId, NodeKind, SourceSpan};

pub use dockerfile::{parse_bytes, parse_dockerfile};
pub use fold::{fold, Folded, OffsetMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub ast: Ast,
    pub diagnostics: Vec<ParseDiagnostic>,
    /// Line-continuation character selected by the `escape` directive.
    pub escape_char: char,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("span {start}..{end} lies outside the fragment (length {len})")]
    OutOfRange { start: usize, end: usize, len: usize },
    #[error("input is not valid UTF-8 (first bad byte at offset {0})")]
    UnsupportedEncoding(usize),
}

/// A shell fragment parsed on its own.
#[derive(Debug, Clone)]
pub struct ShellParse {
    /// Tree over the enclosing text; its root holds only `script`.
    pub ast: Ast,
    pub script: NodeId,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Parses `text[start..end]` as shell. Spans are expressed in coordinates
/// of the whole of `text`, continuations (`escape` + newline) included.
pub fn parse_shell_fragment(text: &str, start: usize, end: usize, escape: char) -> ShellParse {
    let folded = fold(text, start, end, escape);
    let mut parser = shell::ShellParser::new(&folded.text, 0, folded.text.len());
    let raw = parser.script();
    let mut ast = Ast::new(text, escape);
    let root = ast.root();
    let script = raw::graft(&mut ast, root, &raw, &folded.map, start, end);
    let diagnostics = map_diagnostics(&ast, &folded.map, parser.diagnostics, start, end);
    ShellParse {
        ast,
        script,
        diagnostics,
    }
}

/// Parses a standalone shell script.
pub fn parse_shell(text: &str) -> ShellParse {
    parse_shell_fragment(text, 0, text.len(), '\\')
}

/// Builds detached nodes for the top-level statements and operators of
/// `text`, e.g. `["rm -rf x"]` gives one `BashCommand`.
pub fn synthesize(ast: &mut Ast, text: &str) -> Vec<NodeId> {
    let mut parser = shell::ShellParser::new(text, 0, text.len());
    let raw = parser.script();
    raw.children
        .first()
        .map(|list| {
            list.children
                .iter()
                .map(|item| raw::build_detached(ast, item))
                .collect()
        })
        .unwrap_or_default()
}

/// Builds one detached word node of `kind` (`BashCommandArgs`,
/// `BashCommandName`) from shell text such as `--force`.
pub fn synthesize_word(ast: &mut Ast, kind: NodeKind, text: &str) -> Option<NodeId> {
    let items = {
        let mut parser = shell::ShellParser::new(text, 0, text.len());
        parser.script()
    };
    let cmd = items.children.first()?.children.first()?;
    let word = cmd.children.first()?;
    if !matches!(
        word.kind,
        NodeKind::BashCommandName | NodeKind::BashCommandArgs
    ) {
        return None;
    }
    let mut word = word.clone();
    word.kind = kind;
    Some(raw::build_detached(ast, &word))
}

fn map_diagnostics(
    ast: &Ast,
    map: &OffsetMap,
    raw: Vec<raw::RawDiag>,
    floor: usize,
    ceil: usize,
) -> Vec<ParseDiagnostic> {
    raw.into_iter()
        .map(|d| {
            let (s, e) = map.span_to_file(d.start, d.end).unwrap_or((floor, floor));
            let s = s.clamp(floor, ceil);
            let e = e.clamp(s, ceil);
            ParseDiagnostic {
                severity: d.severity,
                message: d.message,
                span: ast.line_index().span(ast.source(), s, e),
            }
        })
        .collect()
}
