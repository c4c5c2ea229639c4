//! Pattern queries over the tree.
//!
//! A pattern has a head (node kind, annotation tag or value matcher) and
//! child patterns. A node matches when its head matches and every child
//! pattern can be bound to a distinct node of its subtree (the node itself
//! excluded). `q!(BashCommand, BashCommandArgs, BashCommandArgs)` therefore
//! finds commands with at least two arguments.

use super::words::{is_expansion, literal_text, path_covers, variable_name};
use super::{Annotation, Ast, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueMatcher {
    Equals(String),
    Prefix(String),
    /// Matches words whose removal would remove the given path.
    Covers(String),
    /// Matches expansions of the named variable.
    Variable(String),
}

impl ValueMatcher {
    fn matches(&self, ast: &Ast, id: NodeId) -> bool {
        if let ValueMatcher::Variable(name) = self {
            return is_expansion(ast, id)
                && ast.value(id).and_then(variable_name) == Some(name.as_str());
        }
        let text = match ast.kind(id) {
            NodeKind::BashCommandName
            | NodeKind::BashCommandArgs
            | NodeKind::BashQuotedString
            | NodeKind::BashLiteral => literal_text(ast, id),
            _ => ast.value(id).map(str::to_string),
        };
        let Some(text) = text else { return false };
        match self {
            ValueMatcher::Equals(v) => text == *v,
            ValueMatcher::Prefix(p) => text.starts_with(p.as_str()),
            ValueMatcher::Covers(path) => path_covers(&text, path),
            ValueMatcher::Variable(_) => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    Any,
    Kind(NodeKind),
    Tag(Annotation),
    Value(ValueMatcher),
}

impl From<NodeKind> for Head {
    fn from(kind: NodeKind) -> Self {
        Head::Kind(kind)
    }
}

impl From<Annotation> for Head {
    fn from(tag: Annotation) -> Self {
        Head::Tag(tag)
    }
}

/// Annotation tag heads. Panics on a malformed tag literal.
impl From<&str> for Head {
    fn from(tag: &str) -> Self {
        Head::Tag(Annotation::new(tag).unwrap_or_else(|e| panic!("{e}")))
    }
}

impl From<ValueMatcher> for Head {
    fn from(m: ValueMatcher) -> Self {
        Head::Value(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPattern {
    pub head: Head,
    pub children: Vec<QueryPattern>,
}

impl QueryPattern {
    pub fn new(head: impl Into<Head>) -> Self {
        QueryPattern {
            head: head.into(),
            children: Vec::new(),
        }
    }

    pub fn with(mut self, child: impl Into<QueryPattern>) -> Self {
        self.children.push(child.into());
        self
    }

    /// All annotation tags mentioned anywhere in the pattern.
    pub fn tags(&self) -> Vec<&Annotation> {
        let mut out = Vec::new();
        if let Head::Tag(t) = &self.head {
            out.push(t);
        }
        for c in &self.children {
            out.extend(c.tags());
        }
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(QueryPattern::size).sum::<usize>()
    }
}

macro_rules! pattern_from_head {
    ($($t:ty),*) => {
        $(impl From<$t> for QueryPattern {
            fn from(head: $t) -> Self {
                QueryPattern::new(head)
            }
        })*
    };
}

pattern_from_head!(NodeKind, Annotation, ValueMatcher, &str);

/// Builds a [`QueryPattern`]: `q!(head, child, ...)`.
#[macro_export]
macro_rules! q {
    ($head:expr $(, $child:expr)* $(,)?) => {
        $crate::ast::QueryPattern::new($head)$(.with($child))*
    };
}

fn head_matches(ast: &Ast, id: NodeId, head: &Head) -> bool {
    match head {
        Head::Any => true,
        Head::Kind(kind) => ast.kind(id) == *kind,
        Head::Tag(tag) => ast.annotations(id).contains(tag),
        Head::Value(m) => m.matches(ast, id),
    }
}

/// True iff `id` satisfies the head of `pattern` and each child pattern
/// binds to a distinct strict descendant of `id`.
pub fn matches(ast: &Ast, id: NodeId, pattern: &QueryPattern) -> bool {
    if !head_matches(ast, id, &pattern.head) {
        return false;
    }
    if pattern.children.is_empty() {
        return true;
    }
    let descendants = ast.descendants(id);
    let mut candidates = Vec::with_capacity(pattern.children.len());
    for child in &pattern.children {
        let c: Vec<usize> = descendants
            .iter()
            .enumerate()
            .filter(|(_, d)| matches(ast, **d, child))
            .map(|(i, _)| i)
            .collect();
        if c.is_empty() {
            return false;
        }
        candidates.push(c);
    }
    max_distinct_binding(&candidates, descendants.len()) == pattern.children.len()
}

/// Size of a maximum matching between patterns and candidate nodes
/// (augmenting paths).
fn max_distinct_binding(candidates: &[Vec<usize>], node_count: usize) -> usize {
    fn augment(
        p: usize,
        candidates: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &n in &candidates[p] {
            if seen[n] {
                continue;
            }
            seen[n] = true;
            if owner[n].is_none_or(|q| augment(q, candidates, owner, seen)) {
                owner[n] = Some(p);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; node_count];
    let mut bound = 0;
    for p in 0..candidates.len() {
        let mut seen = vec![false; node_count];
        if augment(p, candidates, &mut owner, &mut seen) {
            bound += 1;
        }
    }
    bound
}

/// Every node of the subtree rooted at `root` (root included) matching
/// `pattern`, in document order.
pub fn find(ast: &Ast, root: NodeId, pattern: &QueryPattern) -> Vec<NodeId> {
    ast.preorder(root)
        .into_iter()
        .filter(|n| matches(ast, *n, pattern))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_dockerfile;

    #[test]
    fn reflexive_kind_match() {
        let parsed = parse_dockerfile("RUN echo hi\n");
        let ast = &parsed.ast;
        for n in ast.preorder(ast.root()) {
            assert!(matches(ast, n, &QueryPattern::new(ast.kind(n))));
        }
    }

    #[test]
    fn distinct_bindings_count_arguments() {
        let parsed = parse_dockerfile("RUN apt-get update\nRUN apt-get install -y curl\n");
        let ast = &parsed.ast;
        let two_args = q!(
            NodeKind::BashCommand,
            NodeKind::BashCommandArgs,
            NodeKind::BashCommandArgs
        );
        let found = find(ast, ast.root(), &two_args);
        assert_eq!(found.len(), 1);
        assert!(ast.text(found[0]).contains("install"));
    }

    #[test]
    fn empty_file_has_no_commands() {
        let parsed = parse_dockerfile("");
        let found = find(&parsed.ast, parsed.ast.root(), &q!(NodeKind::BashCommand));
        assert!(found.is_empty());
    }

    #[test]
    fn value_matchers() {
        let parsed = parse_dockerfile("RUN rm -rf /var/lib/apt/lists/* \"$TMP\"\n");
        let ast = &parsed.ast;
        let covers = q!(
            NodeKind::BashCommand,
            ValueMatcher::Covers("/var/lib/apt/lists".into())
        );
        assert_eq!(find(ast, ast.root(), &covers).len(), 1);
        let var = q!(NodeKind::BashCommand, ValueMatcher::Variable("TMP".into()));
        assert_eq!(find(ast, ast.root(), &var).len(), 1);
        let other = q!(NodeKind::BashCommand, ValueMatcher::Variable("TMPDIR".into()));
        assert!(find(ast, ast.root(), &other).is_empty());
    }
}
