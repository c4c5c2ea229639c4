//! Canonical rendering: single spaces between words, ` && `-style
//! operators, exec-form arrays as `["a", "b"]`.

use crate::ast::{Ast, NodeId, NodeKind};

/// Canonical text of a subtree.
pub fn render(ast: &Ast, id: NodeId) -> String {
    let mut out = String::new();
    render_into(ast, id, &mut out);
    out
}

/// The whole document, one instruction or comment per line.
pub(crate) fn document(ast: &Ast) -> String {
    let root = ast.root();
    let mut out = String::new();
    for c in ast.children(root) {
        render_into(ast, *c, &mut out);
        out.push('\n');
    }
    if !ast.source().ends_with('\n') && out.ends_with('\n') {
        out.pop();
    }
    out
}

fn join(ast: &Ast, ids: &[NodeId], sep: &str, out: &mut String) {
    for (i, c) in ids.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        render_into(ast, *c, out);
    }
}

/// A list rendered so that a keyword (`then`, `fi`, `done`) may follow.
fn terminated_list(ast: &Ast, id: NodeId, out: &mut String) {
    render_into(ast, id, out);
    if !(out.ends_with(';') || out.ends_with('&') || out.ends_with('\n')) {
        out.push(';');
    }
}

pub(crate) fn render_into(ast: &Ast, id: NodeId, out: &mut String) {
    let kind = ast.kind(id);
    let children = ast.children(id);
    let value = ast.value(id).unwrap_or("");
    if let Some(keyword) = kind.keyword() {
        out.push_str(keyword);
        if !children.is_empty() {
            out.push(' ');
            join(ast, children, " ", out);
        }
        return;
    }
    match kind {
        NodeKind::DockerFile => out.push_str(&document(ast)),
        NodeKind::Comment | NodeKind::ParserDirective | NodeKind::BashOpaque => {
            out.push_str(value)
        }
        NodeKind::BashLiteral => {
            let exec = ast.parent(id).is_some_and(|p| {
                ast.kind(p) == NodeKind::BashCommandArgs && ast.value(p) == Some("[")
            });
            if exec {
                out.push_str(&serde_json::to_string(value).unwrap_or_default());
            } else {
                out.push_str(value);
            }
        }
        NodeKind::BashCommandArgs if value == "[" => {
            out.push('[');
            join(ast, children, ", ", out);
            out.push(']');
        }
        NodeKind::BashCommandName | NodeKind::BashCommandArgs => join(ast, children, "", out),
        NodeKind::BashQuotedString => {
            out.push_str(value);
            join(ast, children, "", out);
            out.push_str(if value == "\"" { "\"" } else { "'" });
        }
        NodeKind::BashVariable => {
            out.push_str(value);
            if !value.starts_with('$') {
                out.push('=');
                join(ast, children, "", out);
            }
        }
        NodeKind::BashCommandSubstitution => {
            let backtick = value == "`";
            out.push_str(if backtick { "`" } else { "$(" });
            join(ast, children, "", out);
            out.push_str(if backtick { "`" } else { ")" });
        }
        NodeKind::BashRedirect => {
            out.push_str(value);
            join(ast, children, "", out);
        }
        NodeKind::BashCommand => join(ast, children, " ", out),
        NodeKind::BashScript | NodeKind::BashIfCondition | NodeKind::BashIfBody => {
            join(ast, children, " ", out)
        }
        NodeKind::BashStatementList => statement_list(ast, children, out),
        NodeKind::BashOperatorAnd => out.push_str("&&"),
        NodeKind::BashOperatorOr => out.push_str("||"),
        NodeKind::BashOperatorSemicolon => out.push(';'),
        NodeKind::BashPipe => out.push_str(if value.is_empty() { "|" } else { value }),
        NodeKind::BashSubshell => {
            out.push('(');
            let mut rest = children.iter();
            if let Some(list) = rest.next() {
                render_into(ast, *list, out);
            }
            out.push(')');
            for r in rest {
                out.push(' ');
                render_into(ast, *r, out);
            }
        }
        NodeKind::BashIf => if_clause(ast, id, out),
        NodeKind::BashElseBody => match children.first() {
            Some(c) if ast.kind(*c) == NodeKind::BashIf => render_into(ast, *c, out),
            Some(c) => {
                out.push_str("else ");
                terminated_list(ast, *c, out);
            }
            None => out.push_str("else"),
        },
        NodeKind::BashFor => {
            out.push_str("for ");
            out.push_str(value);
            let words: Vec<NodeId> = children
                .iter()
                .copied()
                .filter(|c| ast.kind(*c) == NodeKind::BashCommandArgs)
                .collect();
            if !words.is_empty() {
                out.push_str(" in ");
                join(ast, &words, " ", out);
            }
            out.push_str("; do ");
            for c in children {
                match ast.kind(*c) {
                    NodeKind::BashStatementList => {
                        terminated_list(ast, *c, out);
                        out.push_str(" done");
                    }
                    NodeKind::BashRedirect => {
                        out.push(' ');
                        render_into(ast, *c, out);
                    }
                    _ => {}
                }
            }
        }
        _ => join(ast, children, " ", out),
    }
}

fn statement_list(ast: &Ast, items: &[NodeId], target: &mut String) {
    let mut buf = String::new();
    let out = &mut buf;
    let mut prev_was_item = false;
    for c in items {
        let kind = ast.kind(*c);
        let background = kind == NodeKind::BashOpaque && ast.value(*c) == Some("&");
        match kind {
            NodeKind::BashOperatorSemicolon => {
                out.push(';');
                prev_was_item = false;
            }
            _ if background => {
                out.push_str(" &");
                prev_was_item = false;
            }
            NodeKind::BashOperatorAnd | NodeKind::BashOperatorOr | NodeKind::BashPipe => {
                out.push(' ');
                render_into(ast, *c, out);
                prev_was_item = false;
            }
            _ => {
                // items separated by a newline in the source
                if prev_was_item {
                    out.push(';');
                }
                if !out.is_empty() {
                    out.push(' ');
                }
                render_into(ast, *c, out);
                prev_was_item = true;
            }
        }
    }
    target.push_str(&buf);
}

fn if_clause(ast: &Ast, id: NodeId, out: &mut String) {
    let value = ast.value(id).unwrap_or("if");
    out.push_str(value);
    for c in ast.children(id) {
        match ast.kind(*c) {
            NodeKind::BashIfCondition => {
                out.push(' ');
                terminated_list(ast, *c, out);
            }
            NodeKind::BashIfBody => {
                out.push_str(" then ");
                terminated_list(ast, *c, out);
            }
            NodeKind::BashElseBody => {
                out.push(' ');
                render_into(ast, *c, out);
            }
            _ => {}
        }
    }
    if value == "if" {
        out.push_str(" fi");
    }
    for c in ast.children(id) {
        if ast.kind(*c) == NodeKind::BashRedirect {
            out.push(' ');
            render_into(ast, *c, out);
        }
    }
}
