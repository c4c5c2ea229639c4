//! Execution order of the commands of a RUN instruction.

use serde::Serialize;

use crate::ast::{Ast, NodeId, NodeKind};

/// A command of a RUN payload in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderedCommand {
    #[serde(skip)]
    pub node: NodeId,
    /// Runs whenever the instruction succeeds.
    pub guaranteed: bool,
    /// The conditional regions (`||` operands, `if`/`for` bodies, command
    /// substitutions) the command sits in, outermost first.
    #[serde(skip)]
    pub conditions: Vec<NodeId>,
}

impl OrderedCommand {
    /// True when this command runs whenever a command nested in
    /// `conditions` runs, i.e. its own regions are a prefix of those.
    pub fn guaranteed_within(&self, conditions: &[NodeId]) -> bool {
        conditions.starts_with(&self.conditions)
    }
}

/// Linearizes the shell payload of `run` (a RUN instruction). Commands of
/// `&&`, `;` and `|` chains are guaranteed; right operands of `||`, the
/// bodies of `if`, `else` and `for`, and anything inside `$(...)` are
/// conditional. Wrapped commands (`sudo x`, `sh -c 'x'`) follow their
/// wrapper.
pub fn evaluate_ordering(ast: &Ast, run: NodeId) -> Vec<OrderedCommand> {
    let mut out = Vec::new();
    let mut conditions = Vec::new();
    for c in ast.children(run) {
        walk(ast, *c, &mut conditions, &mut out);
    }
    out
}

fn walk(ast: &Ast, n: NodeId, conditions: &mut Vec<NodeId>, out: &mut Vec<OrderedCommand>) {
    let conditional = |conditions: &mut Vec<NodeId>, out: &mut Vec<OrderedCommand>| {
        conditions.push(n);
        for c in ast.children(n) {
            walk(ast, *c, conditions, out);
        }
        conditions.pop();
    };
    match ast.kind(n) {
        NodeKind::BashStatementList => {
            let mut after_or = false;
            for c in ast.children(n) {
                match ast.kind(*c) {
                    NodeKind::BashOperatorOr => after_or = true,
                    k if k.is_operator() || is_background(ast, *c) => after_or = false,
                    _ if after_or => {
                        conditions.push(*c);
                        walk(ast, *c, conditions, out);
                        conditions.pop();
                    }
                    _ => walk(ast, *c, conditions, out),
                }
            }
        }
        NodeKind::BashCommand => {
            out.push(OrderedCommand {
                node: n,
                guaranteed: conditions.is_empty(),
                conditions: conditions.clone(),
            });
            for c in ast.children(n) {
                walk(ast, *c, conditions, out);
            }
        }
        NodeKind::BashIfBody
        | NodeKind::BashElseBody
        | NodeKind::BashFor
        | NodeKind::BashCommandSubstitution => conditional(conditions, out),
        _ => {
            for c in ast.children(n) {
                walk(ast, *c, conditions, out);
            }
        }
    }
}

fn is_background(ast: &Ast, n: NodeId) -> bool {
    ast.kind(n) == NodeKind::BashOpaque && ast.value(n) == Some("&")
}
