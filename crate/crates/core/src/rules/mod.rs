//! Smell detection. A rule is a trigger pattern plus a check; a smell is a
//! trigger match whose check fails.

mod catalog;
mod ordering;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ast::{matches, Ast, NodeId, NodeKind, QueryPattern, SourceSpan};
use crate::enrich::SchemaSet;

pub use catalog::{all_rules, is_plain_http_url, keyserver_host};
pub(crate) use catalog::{
    asc_files, keyserver_values, mkdir_usr_src_paths, mktemp_variable,
    sha256_single_space, tar_archive,
};
pub use ordering::{evaluate_ordering, OrderedCommand};

pub const DEFAULT_KEYSERVER: &str = "ha.pool.sks-keyservers.net";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ConsequentMode {
    InNode,
    BeforeNode,
    AfterNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Scope {
    SameCommand,
    SameRunInstruction,
}

/// Context condition that must hold around a trigger match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consequent {
    pub mode: ConsequentMode,
    pub pattern: QueryPattern,
    pub scope: Scope,
}

impl Consequent {
    pub fn in_node(pattern: QueryPattern) -> Self {
        Consequent {
            mode: ConsequentMode::InNode,
            pattern,
            scope: Scope::SameCommand,
        }
    }

    pub fn before(pattern: QueryPattern) -> Self {
        Consequent {
            mode: ConsequentMode::BeforeNode,
            pattern,
            scope: Scope::SameRunInstruction,
        }
    }

    pub fn after(pattern: QueryPattern) -> Self {
        Consequent {
            mode: ConsequentMode::AfterNode,
            pattern,
            scope: Scope::SameRunInstruction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    /// Keyserver host expected by `gpgUseHaPools`; defaults to
    /// [`DEFAULT_KEYSERVER`].
    pub keyserver: Option<String>,
}

impl RuleConfig {
    pub fn keyserver(&self) -> &str {
        self.keyserver.as_deref().unwrap_or(DEFAULT_KEYSERVER)
    }
}

/// Context handed to rule checks.
pub struct CheckContext<'a> {
    pub ast: &'a Ast,
    pub config: &'a RuleConfig,
}

pub type DeriveFn = fn(&Ast, NodeId) -> Vec<Consequent>;
pub type PredicateFn = fn(&CheckContext<'_>, NodeId) -> Vec<NodeId>;

#[derive(Clone)]
pub enum Check {
    /// Smell when the consequent is not satisfied.
    Consequent(Consequent),
    /// Consequents computed from the trigger (e.g. "the archive this `tar`
    /// extracts is removed later"); smell when any is unsatisfied. No
    /// consequents means the trigger is skipped.
    Derived(DeriveFn),
    /// Returns the offending nodes directly (e.g. `http://` arguments).
    Predicate(PredicateFn),
}

impl std::fmt::Debug for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Check::Consequent(c) => f.debug_tuple("Consequent").field(c).finish(),
            Check::Derived(_) => f.write_str("Derived"),
            Check::Predicate(_) => f.write_str("Predicate"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmellRule {
    pub id: &'static str,
    pub trigger: QueryPattern,
    pub check: Check,
    pub message: &'static str,
    pub repairable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmellReport {
    pub rule_id: &'static str,
    #[serde(skip)]
    pub node: NodeId,
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("unknown rule id `{0}`")]
    UnknownRuleId(String),
    #[error("rule `{rule}` uses tag `{tag}`, which no schema produces")]
    UnknownTag { rule: String, tag: String },
}

/// An ordered selection of rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<SmellRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::all()
    }
}

impl RuleSet {
    pub fn all() -> RuleSet {
        RuleSet { rules: all_rules() }
    }

    pub fn ids() -> Vec<&'static str> {
        all_rules().iter().map(|r| r.id).collect()
    }

    pub fn from_rules(rules: Vec<SmellRule>) -> RuleSet {
        RuleSet { rules }
    }

    /// The catalog rules named in `ids`, in catalog order.
    pub fn select<S: AsRef<str>>(ids: &[S]) -> Result<RuleSet, RuleError> {
        let all = all_rules();
        let wanted: BTreeSet<&str> = ids.iter().map(AsRef::as_ref).collect();
        for id in &wanted {
            if !all.iter().any(|r| r.id == *id) {
                return Err(RuleError::UnknownRuleId(id.to_string()));
            }
        }
        Ok(RuleSet {
            rules: all.into_iter().filter(|r| wanted.contains(r.id)).collect(),
        })
    }

    /// This set minus the rules named in `ids`.
    pub fn without<S: AsRef<str>>(mut self, ids: &[S]) -> Result<RuleSet, RuleError> {
        let all = all_rules();
        for id in ids {
            if !all.iter().any(|r| r.id == id.as_ref()) {
                return Err(RuleError::UnknownRuleId(id.as_ref().to_string()));
            }
        }
        self.rules
            .retain(|r| !ids.iter().any(|id| id.as_ref() == r.id));
        Ok(self)
    }

    pub fn rules(&self) -> &[SmellRule] {
        &self.rules
    }

    pub fn get(&self, id: &str) -> Option<&SmellRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Checks that every tag in the trigger and static consequents is
    /// produced by `schemas`.
    pub fn validate(&self, schemas: &SchemaSet) -> Result<(), RuleError> {
        let vocab = schemas.vocabulary();
        for rule in &self.rules {
            let mut tags = rule.trigger.tags();
            if let Check::Consequent(c) = &rule.check {
                tags.extend(c.pattern.tags());
            }
            if let Some(t) = tags.into_iter().find(|t| !vocab.contains(t.as_str())) {
                return Err(RuleError::UnknownTag {
                    rule: rule.id.to_string(),
                    tag: t.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// True when `pattern` matches `id` or a node below it, not counting the
/// inside of nested commands (a flag of `sudo`'s inner command is not a
/// flag of `sudo`).
fn matches_in_command(ast: &Ast, cmd: NodeId, pattern: &QueryPattern) -> bool {
    let mut stack = vec![cmd];
    while let Some(n) = stack.pop() {
        if matches(ast, n, pattern) {
            return true;
        }
        for c in ast.children(n) {
            if ast.kind(*c) != NodeKind::BashCommand {
                stack.push(*c);
            }
        }
    }
    false
}

struct Analyzer<'a> {
    ctx: CheckContext<'a>,
    orderings: HashMap<NodeId, Vec<OrderedCommand>>,
}

impl Analyzer<'_> {
    fn ordering(&mut self, run: NodeId) -> &[OrderedCommand] {
        let ast = self.ctx.ast;
        self.orderings
            .entry(run)
            .or_insert_with(|| evaluate_ordering(ast, run))
    }

    fn satisfied(&mut self, trigger: NodeId, c: &Consequent) -> bool {
        let ast = self.ctx.ast;
        match c.mode {
            ConsequentMode::InNode => matches_in_command(ast, trigger, &c.pattern),
            ConsequentMode::BeforeNode | ConsequentMode::AfterNode => {
                let Some(run) = ast.get_parent(trigger, NodeKind::Run) else {
                    return false;
                };
                let order = self.ordering(run);
                let Some(pos) = order.iter().position(|o| o.node == trigger) else {
                    return false;
                };
                let conditions = &order[pos].conditions;
                let range = if c.mode == ConsequentMode::BeforeNode {
                    0..pos
                } else {
                    pos + 1..order.len()
                };
                order[range].iter().any(|o| {
                    o.guaranteed_within(conditions) && matches_in_command(ast, o.node, &c.pattern)
                })
            }
        }
    }
}

/// Runs `rules` over an enriched tree. Reports are sorted by position,
/// then rule id.
pub fn analyze(ast: &Ast, rules: &RuleSet, config: &RuleConfig) -> Vec<SmellReport> {
    let mut analyzer = Analyzer {
        ctx: CheckContext { ast, config },
        orderings: HashMap::new(),
    };
    let nodes = ast.preorder(ast.root());
    let mut reports = Vec::new();
    for rule in &rules.rules {
        for &n in &nodes {
            // only RUN payloads are executed at build time
            if ast.get_parent(n, NodeKind::Run).is_none() || !matches(ast, n, &rule.trigger) {
                continue;
            }
            let offending = match &rule.check {
                Check::Consequent(c) => {
                    if analyzer.satisfied(n, c) {
                        vec![]
                    } else {
                        vec![n]
                    }
                }
                Check::Derived(derive) => {
                    let cs = derive(ast, n);
                    if cs.iter().all(|c| analyzer.satisfied(n, c)) {
                        vec![]
                    } else {
                        vec![n]
                    }
                }
                Check::Predicate(pred) => pred(&analyzer.ctx, n),
            };
            for node in offending {
                reports.push(SmellReport {
                    rule_id: rule.id,
                    node,
                    span: ast.span(node),
                    message: rule.message.to_string(),
                });
            }
        }
    }
    reports.sort_by(|a, b| {
        (a.span.start_offset, a.span.end_offset, a.rule_id)
            .cmp(&(b.span.start_offset, b.span.end_offset, b.rule_id))
    });
    reports.dedup_by(|a, b| a.rule_id == b.rule_id && a.node == b.node);
    reports
}
