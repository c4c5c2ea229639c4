//! Template-based repair of reported smells, iterated until a pass applies
//! nothing (or [`MAX_PASSES`] passes ran).

mod templates;

use std::collections::HashSet;

use serde::Serialize;

use crate::ast::words::{literal_text, word_segments};
use crate::ast::{Ast, NodeId, NodeKind, Origin, SourceSpan};
use crate::enrich::{enrich, SchemaSet, SUBCOMMAND_ROLE};
use crate::parser::{synthesize, synthesize_word};
use crate::rules::{
    analyze, evaluate_ordering, keyserver_values, sha256_single_space, RuleConfig, RuleSet,
    SmellReport,
};

pub use templates::{
    swap_host, template, templates, Action, ActionKind, CommandFn, RepairTemplate, Rewrite,
    CONFIGURE_BUILD_FLAG,
};

pub const MAX_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SkipReason {
    /// The surrounding control flow has no safe insertion point.
    SkippedUnsupported,
    /// The fix would depend on a variable or substitution.
    SkippedNonLiteral,
    /// An earlier repair in the same pass already rewrote this region.
    SkippedConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason:?}: {detail}")]
pub struct Skip {
    pub reason: SkipReason,
    pub detail: String,
}

fn skip(reason: SkipReason, detail: impl Into<String>) -> Skip {
    Skip {
        reason,
        detail: detail.into(),
    }
}

fn unsupported(detail: &str) -> Skip {
    skip(SkipReason::SkippedUnsupported, detail)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedRepair {
    pub rule_id: &'static str,
    pub action: ActionKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRepair {
    pub rule_id: &'static str,
    pub span: SourceSpan,
    pub reason: SkipReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RepairOutcome {
    pub applied: Vec<AppliedRepair>,
    pub skipped: Vec<SkippedRepair>,
    /// Passes that found something to do.
    pub passes: usize,
}

/// Source ranges replaced so far in the current pass.
#[derive(Debug, Default)]
struct PassState {
    replaced: Vec<(usize, usize)>,
}

impl PassState {
    fn claim(&mut self, ast: &Ast, node: NodeId) -> Result<(), Skip> {
        let s = ast.span(node);
        let range = (s.start_offset, s.end_offset);
        let overlaps = |r: &(usize, usize)| {
            r.0 < range.1 && range.0 < r.1 || *r == range
        };
        if ast.origin(node) != Origin::Inserted && self.replaced.iter().any(overlaps) {
            return Err(skip(
                SkipReason::SkippedConflict,
                "an earlier repair already rewrote this region",
            ));
        }
        self.replaced.push(range);
        Ok(())
    }
}

/// Applies the template of `report.rule_id` to the tree `report` came from.
pub fn repair_one(
    ast: &mut Ast,
    report: &SmellReport,
    config: &RuleConfig,
) -> Result<ActionKind, Skip> {
    apply(ast, report, config, &mut PassState::default())
}

/// Analyzes, repairs every report in position order, re-enriches and
/// re-analyzes until a pass applies nothing. The tree is left enriched.
pub fn repair_all(
    ast: &mut Ast,
    rules: &RuleSet,
    schemas: &SchemaSet,
    config: &RuleConfig,
) -> RepairOutcome {
    let mut outcome = RepairOutcome::default();
    for _ in 0..MAX_PASSES {
        enrich(ast, schemas);
        let reports = analyze(ast, rules, config);
        if reports.is_empty() {
            break;
        }
        outcome.passes += 1;
        let mut state = PassState::default();
        let mut touched: HashSet<NodeId> = HashSet::new();
        let mut applied = 0;
        for report in &reports {
            let run = ast.get_parent(report.node, NodeKind::Run);
            let stale = run.is_some_and(|r| touched.contains(&r))
                && ast.is_attached(report.node)
                && {
                    // an earlier repair in the same RUN may have fixed it
                    enrich(ast, schemas);
                    !still_reported(ast, rules, config, report)
                };
            if stale {
                continue;
            }
            match apply(ast, report, config, &mut state) {
                Ok(action) => {
                    applied += 1;
                    touched.extend(run);
                    outcome.applied.push(AppliedRepair {
                        rule_id: report.rule_id,
                        action,
                        span: report.span,
                    });
                }
                Err(s) => outcome.skipped.push(SkippedRepair {
                    rule_id: report.rule_id,
                    span: report.span,
                    reason: s.reason,
                    detail: s.detail,
                }),
            }
        }
        if applied == 0 {
            break;
        }
    }
    enrich(ast, schemas);
    let applied = &outcome.applied;
    outcome
        .skipped
        .retain(|s| !applied.iter().any(|a| a.rule_id == s.rule_id && a.span == s.span));
    let mut seen = HashSet::new();
    outcome
        .skipped
        .retain(|s| seen.insert((s.rule_id, s.span.start_offset, s.span.end_offset)));
    outcome
}

fn still_reported(ast: &Ast, rules: &RuleSet, config: &RuleConfig, report: &SmellReport) -> bool {
    let Some(rule) = rules.get(report.rule_id) else {
        return false;
    };
    let one = RuleSet::from_rules(vec![rule.clone()]);
    analyze(ast, &one, config)
        .iter()
        .any(|r| r.node == report.node)
}

fn apply(
    ast: &mut Ast,
    report: &SmellReport,
    config: &RuleConfig,
    state: &mut PassState,
) -> Result<ActionKind, Skip> {
    let template = template(report.rule_id).ok_or_else(|| unsupported("no repair template"))?;
    let node = report.node;
    if !ast.is_attached(node) {
        return Err(skip(
            SkipReason::SkippedConflict,
            "an earlier repair replaced the reported node",
        ));
    }
    let non_literal = || skip(SkipReason::SkippedNonLiteral, "operand is not a literal");
    match template.action {
        Action::InsertFlag(flag) => insert_flag(ast, node, flag)?,
        Action::AppendCleanupCommand(text) => {
            let text = text(ast, node).ok_or_else(non_literal)?;
            append_command(ast, node, &text)?
        }
        Action::InsertCommandAfter(text) => {
            let text = text(ast, node).ok_or_else(non_literal)?;
            insert_command_after(ast, node, &text)?
        }
        Action::RewriteLiteral(rewrite) => rewrite_literal(ast, node, rewrite, config, state)?,
        Action::MergeIntoSequence(text) => merge_into_sequence(ast, node, text)?,
    }
    Ok(template.action.kind())
}

/// Adds `flag` after the command's last subcommand word (or its name),
/// after flags inserted there before.
fn insert_flag(ast: &mut Ast, cmd: NodeId, flag: &str) -> Result<(), Skip> {
    let children = ast.children(cmd).to_vec();
    let name = children
        .iter()
        .position(|c| ast.kind(*c) == NodeKind::BashCommandName)
        .ok_or_else(|| unsupported("command has no name"))?;
    let mut pos = name + 1;
    if let Some(sub) = children
        .iter()
        .rposition(|c| ast.has_annotation(*c, SUBCOMMAND_ROLE))
    {
        pos = pos.max(sub + 1);
    }
    while children
        .get(pos)
        .is_some_and(|c| ast.origin(*c) == Origin::Inserted && ast.kind(*c) == NodeKind::BashCommandArgs)
    {
        pos += 1;
    }
    let word = synthesize_word(ast, NodeKind::BashCommandArgs, flag)
        .ok_or_else(|| unsupported("flag is not a single word"))?;
    ast.add_child(cmd, word, pos)
        .map_err(|e| unsupported(&e.to_string()))
}

/// Where a command sits in its statement list: the pipeline containing it
/// spans `first..=last`. `sudo` counts the wrappers around it.
struct Item {
    list: NodeId,
    first: usize,
    last: usize,
    sudo: usize,
}

fn is_separator(ast: &Ast, n: NodeId) -> bool {
    ast.kind(n).is_operator() || (ast.kind(n) == NodeKind::BashOpaque && ast.value(n) == Some("&"))
}

fn locate(ast: &Ast, cmd: NodeId) -> Result<Item, Skip> {
    let run = ast.get_parent(cmd, NodeKind::Run);
    let mut anchor = cmd;
    // out of `$(...)`: cleanup goes after the command using the output
    while let Some(s) = ast
        .get_parent(anchor, NodeKind::BashCommandSubstitution)
        .filter(|s| run.is_some_and(|r| ast.ancestors(*s).any(|a| a == r)))
    {
        anchor = ast
            .get_parent(s, NodeKind::BashCommand)
            .ok_or_else(|| unsupported("substitution outside a command"))?;
    }
    let mut sudo = 0;
    let mut n = anchor;
    let list = loop {
        let p = ast
            .parent(n)
            .ok_or_else(|| unsupported("command is detached"))?;
        match ast.kind(p) {
            NodeKind::BashStatementList => break p,
            NodeKind::BashCommand => {
                if ast.has_annotation(p, "SUDO") {
                    sudo += 1;
                }
                n = p;
            }
            _ => return Err(unsupported("command is not a statement of a list")),
        }
    };
    let kids = ast.children(list);
    let idx = kids.iter().position(|c| *c == n).expect("child of its parent");
    let mut first = idx;
    while first >= 2 && ast.kind(kids[first - 1]) == NodeKind::BashPipe {
        first -= 2;
    }
    let mut last = idx;
    while last + 2 < kids.len() && ast.kind(kids[last + 1]) == NodeKind::BashPipe {
        last += 2;
    }
    Ok(Item {
        list,
        first,
        last,
        sudo,
    })
}

/// Rejects text that would break out of a quoted `sh -c` script.
fn check_quoting(ast: &Ast, list: NodeId, text: &str) -> Result<(), Skip> {
    let Some(q) = ast.get_parent(list, NodeKind::BashQuotedString) else {
        return Ok(());
    };
    let bad: &[char] = match ast.value(q) {
        Some("\"") => &['"', '$', '`', '\\'],
        _ => &['\'', '\\'],
    };
    if text.contains(bad) {
        return Err(unsupported("the command cannot be quoted inside the wrapped script"));
    }
    Ok(())
}

/// Leads for an inserted `&& cmd` that copy the layout of the nearest
/// `&&`/`||` of the list (e.g. a continuation before the operator).
fn joint_style(ast: &Ast, list: NodeId, near: usize) -> (String, String) {
    let kids = ast.children(list);
    let is_joint = |i: usize| {
        matches!(
            ast.kind(kids[i]),
            NodeKind::BashOperatorAnd | NodeKind::BashOperatorOr
        )
    };
    let op = (near + 1 < kids.len() && is_joint(near + 1))
        .then_some(near + 1)
        .or_else(|| (1..near.min(kids.len())).rev().find(|i| is_joint(*i)));
    let default = (" ".to_string(), " ".to_string());
    let Some(op) = op else {
        return default;
    };
    if op + 1 >= kids.len() || kids[op - 1..=op + 1].iter().any(|c| ast.origin(*c) != Origin::Source) {
        return default;
    }
    let source = ast.source();
    let escape = ast.escape_char();
    let clean = |from: usize, to: usize| {
        source
            .get(from..to)
            .filter(|s| !s.is_empty() && s.chars().all(|c| c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == escape))
            .map_or_else(|| " ".to_string(), str::to_string)
    };
    (
        clean(ast.span(kids[op - 1]).end_offset, ast.span(kids[op]).start_offset),
        clean(ast.span(kids[op]).end_offset, ast.span(kids[op + 1]).start_offset),
    )
}

/// Inserts `&& text` after position `after` of the item's list.
fn insert_joined(ast: &mut Ast, item: &Item, after: usize, text: &str) -> Result<(), Skip> {
    check_quoting(ast, item.list, text)?;
    let (op_lead, cmd_lead) = joint_style(ast, item.list, after);
    let nodes = synthesize(ast, &format!(": && {}{text}", "sudo ".repeat(item.sudo)));
    let [_, op, cmd] = nodes[..] else {
        return Err(unsupported("cleanup is not a single command"));
    };
    ast.set_lead(op, Some(op_lead));
    ast.set_lead(cmd, Some(cmd_lead));
    for (i, n) in [op, cmd].into_iter().enumerate() {
        ast.add_child(item.list, n, after + 1 + i)
            .map_err(|e| unsupported(&e.to_string()))?;
    }
    Ok(())
}

/// `&& text` at the end of the list holding the trigger, so that it runs
/// whenever the trigger did.
fn append_command(ast: &mut Ast, cmd: NodeId, text: &str) -> Result<(), Skip> {
    let item = locate(ast, cmd)?;
    let last = ast
        .children(item.list)
        .iter()
        .rposition(|c| !is_separator(ast, *c))
        .expect("the list holds the trigger");
    insert_joined(ast, &item, last, text)
}

/// `&& text` right after the pipeline holding the trigger.
fn insert_command_after(ast: &mut Ast, cmd: NodeId, text: &str) -> Result<(), Skip> {
    let item = locate(ast, cmd)?;
    insert_joined(ast, &item, item.last, text)
}

/// `text &&` in front of the trigger, when the trigger always runs and no
/// guaranteed command of the RUN matches the missing predecessor.
fn merge_into_sequence(ast: &mut Ast, cmd: NodeId, text: &str) -> Result<(), Skip> {
    let run = ast
        .get_parent(cmd, NodeKind::Run)
        .ok_or_else(|| unsupported("not inside RUN"))?;
    let order = evaluate_ordering(ast, run);
    if !order.iter().any(|o| o.node == cmd && o.guaranteed) {
        return Err(unsupported("the command runs conditionally"));
    }
    if order
        .iter()
        .any(|o| o.guaranteed && ast.has_annotation(o.node, "APT-GET-UPDATE"))
    {
        return Err(unsupported("an update runs later in the same RUN"));
    }
    let item = locate(ast, cmd)?;
    check_quoting(ast, item.list, text)?;
    let nodes = synthesize(ast, &format!("{}{text} && :", "sudo ".repeat(item.sudo)));
    let [first, op, _] = nodes[..] else {
        return Err(unsupported("prefix is not a single command"));
    };
    ast.set_lead(op, Some(" ".into()));
    for (i, n) in [first, op].into_iter().enumerate() {
        ast.add_child(item.list, n, item.first + i)
            .map_err(|e| unsupported(&e.to_string()))?;
    }
    Ok(())
}

fn rewrite_literal(
    ast: &mut Ast,
    node: NodeId,
    rewrite: Rewrite,
    config: &RuleConfig,
    state: &mut PassState,
) -> Result<(), Skip> {
    let non_literal = || skip(SkipReason::SkippedNonLiteral, "literal text is split or escaped");
    state.claim(ast, node)?;
    match rewrite {
        Rewrite::HttpsScheme => {
            let Some(Some((_, leaf))) = word_segments(ast, node).into_iter().next() else {
                return Err(non_literal());
            };
            let raw = ast.value(leaf).unwrap_or("");
            let rest = raw.strip_prefix("http://").ok_or_else(non_literal)?;
            let value = format!("https://{rest}");
            replace_leaf(ast, leaf, value)
        }
        Rewrite::DoubleSpace => {
            let echo = ast
                .get_parent(node, NodeKind::BashCommand)
                .ok_or_else(non_literal)?;
            let sha = ast
                .next_sibling(echo)
                .and_then(|pipe| ast.next_sibling(pipe))
                .ok_or_else(non_literal)?;
            let (arg, leaf, at) = sha256_single_space(ast, sha)
                .filter(|(arg, _, _)| *arg == node)
                .ok_or_else(non_literal)?;
            debug_assert_eq!(arg, node);
            let raw = ast.value(leaf).unwrap_or("");
            let value = format!("{} {}", &raw[..at], &raw[at..]);
            replace_leaf(ast, leaf, value)
        }
        Rewrite::KeyserverHost => {
            let cmd = ast
                .get_parent(node, NodeKind::BashCommand)
                .ok_or_else(non_literal)?;
            let (_, value, offset) = keyserver_values(ast, cmd)
                .into_iter()
                .find(|(n, _, _)| *n == node)
                .ok_or_else(non_literal)?;
            let text = literal_text(ast, node).ok_or_else(non_literal)?;
            let new = format!("{}{}", &text[..offset], swap_host(&value, config.keyserver()));
            let quoted = templates::quote(&new).ok_or_else(non_literal)?;
            let word = synthesize_word(ast, NodeKind::BashCommandArgs, &quoted)
                .ok_or_else(non_literal)?;
            ast.replace_node(node, word)
                .map_err(|e| unsupported(&e.to_string()))
        }
    }
}

fn replace_leaf(ast: &mut Ast, leaf: NodeId, value: String) -> Result<(), Skip> {
    let new = ast.new_node(NodeKind::BashLiteral, Some(value));
    ast.replace_node(leaf, new)
        .map_err(|e| unsupported(&e.to_string()))
}
