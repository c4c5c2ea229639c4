//! Helpers that read shell words (command names, arguments, redirect
//! targets) as plain text.

use super::{Ast, NodeId, NodeKind};

/// Text of a word-like node after quote removal, or `None` when any part
/// is a variable, substitution or opaque construct.
pub fn literal_text(ast: &Ast, id: NodeId) -> Option<String> {
    match ast.kind(id) {
        NodeKind::BashLiteral => {
            let raw = ast.value(id).unwrap_or("");
            let quote = ast
                .parent(id)
                .filter(|p| ast.kind(*p) == NodeKind::BashQuotedString)
                .and_then(|p| ast.value(p));
            Some(match quote {
                Some("\"") => unescape_double_quoted(raw),
                Some(_) => raw.to_string(),
                None => unescape_unquoted(raw),
            })
        }
        NodeKind::BashQuotedString
        | NodeKind::BashCommandName
        | NodeKind::BashCommandArgs
        | NodeKind::BashRedirect => {
            let mut out = String::new();
            for c in ast.children(id) {
                out.push_str(&literal_text(ast, *c)?);
            }
            Some(out)
        }
        NodeKind::BashVariable
        | NodeKind::BashCommandSubstitution
        | NodeKind::BashOpaque
        | NodeKind::BashScript => None,
        _ => ast.value(id).map(str::to_string),
    }
}

/// Literal text up to the first non-literal part, and whether the whole
/// word was literal.
pub fn literal_prefix(ast: &Ast, id: NodeId) -> (String, bool) {
    let mut out = String::new();
    let complete = prefix_into(ast, id, &mut out);
    (out, complete)
}

fn prefix_into(ast: &Ast, id: NodeId, out: &mut String) -> bool {
    match ast.kind(id) {
        NodeKind::BashQuotedString
        | NodeKind::BashCommandName
        | NodeKind::BashCommandArgs
        | NodeKind::BashRedirect => ast.children(id).iter().all(|c| prefix_into(ast, *c, out)),
        _ => match literal_text(ast, id) {
            Some(text) => {
                out.push_str(&text);
                true
            }
            None => false,
        },
    }
}

/// Segments of a word: `Some(text)` for literal runs, `None` for each
/// expansion, each with the literal leaf it came from.
pub fn word_segments(ast: &Ast, id: NodeId) -> Vec<Option<(String, NodeId)>> {
    let mut out: Vec<Option<(String, NodeId)>> = Vec::new();
    collect_segments(ast, id, &mut out);
    out
}

fn collect_segments(ast: &Ast, id: NodeId, out: &mut Vec<Option<(String, NodeId)>>) {
    match ast.kind(id) {
        NodeKind::BashQuotedString
        | NodeKind::BashCommandName
        | NodeKind::BashCommandArgs
        | NodeKind::BashRedirect => {
            for c in ast.children(id) {
                collect_segments(ast, *c, out);
            }
        }
        _ => match literal_text(ast, id) {
            Some(text) => out.push(Some((text, id))),
            None => out.push(None),
        },
    }
}

/// Name referenced by a variable expansion such as `$X`, `${X}` or `${X:-d}`.
pub fn variable_name(raw: &str) -> Option<&str> {
    let rest = raw.strip_prefix('$')?;
    let rest = rest.strip_prefix('{').unwrap_or(rest);
    let end = rest
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    if end == 0 {
        // special parameters: $?, $@, $1 ...
        return rest.get(..1).filter(|s| !s.is_empty());
    }
    Some(&rest[..end])
}

/// True for `BashVariable` nodes that expand a variable (as opposed to
/// assignments, which carry the value parts as children).
pub fn is_expansion(ast: &Ast, id: NodeId) -> bool {
    ast.kind(id) == NodeKind::BashVariable && ast.value(id).is_some_and(|v| v.starts_with('$'))
}

pub fn unescape_unquoted(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(next) = chars.next() {
                out.push(next);
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn unescape_double_quoted(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.peek() {
                Some(&next @ ('$' | '`' | '"' | '\\' | '\n')) => {
                    chars.next();
                    if next != '\n' {
                        out.push(next);
                    }
                }
                _ => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// True when removing `arg` (as `rm -rf` would) removes `path` or all of
/// its contents.
pub fn path_covers(arg: &str, path: &str) -> bool {
    let path = path.trim_end_matches('/');
    let dir = arg.strip_suffix("/*").unwrap_or(arg).trim_end_matches('/');
    dir == path || path.starts_with(&format!("{dir}/"))
}
