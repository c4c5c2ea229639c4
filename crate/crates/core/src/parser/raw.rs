//! Intermediate parse trees in folded-text coordinates, and their transfer
//! into the arena.

use crate::ast::words::{unescape_double_quoted, unescape_unquoted};
use crate::ast::{Ast, NodeId, NodeKind};

use super::fold::OffsetMap;
use super::Severity;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawNode {
    pub kind: NodeKind,
    pub start: usize,
    pub end: usize,
    pub value: Option<String>,
    pub children: Vec<RawNode>,
}

impl RawNode {
    pub fn new(
        kind: NodeKind,
        start: usize,
        end: usize,
        value: Option<String>,
        children: Vec<RawNode>,
    ) -> Self {
        RawNode {
            kind,
            start,
            end,
            value,
            children,
        }
    }

    pub fn leaf(kind: NodeKind, start: usize, end: usize, value: Option<String>) -> Self {
        Self::new(kind, start, end, value, Vec::new())
    }

    /// Wraps `inner` in a node of `kind` with the same span.
    pub fn wrap(kind: NodeKind, inner: RawNode) -> Self {
        Self::new(kind, inner.start, inner.end, None, vec![inner])
    }

    /// Unquoted text of a word, `None` if any part is not literal.
    pub fn literal(&self) -> Option<String> {
        self.literal_in(None)
    }

    fn literal_in(&self, quote: Option<&str>) -> Option<String> {
        match self.kind {
            NodeKind::BashLiteral => {
                let raw = self.value.as_deref().unwrap_or("");
                Some(match quote {
                    Some("\"") => unescape_double_quoted(raw),
                    Some(_) => raw.to_string(),
                    None => unescape_unquoted(raw),
                })
            }
            NodeKind::BashQuotedString => self
                .children
                .iter()
                .map(|c| c.literal_in(self.value.as_deref()))
                .collect(),
            NodeKind::BashCommandName | NodeKind::BashCommandArgs => {
                self.children.iter().map(|c| c.literal_in(None)).collect()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawDiag {
    pub severity: Severity,
    pub message: String,
    pub start: usize,
    pub end: usize,
}

/// Copies `raw` under `parent`, translating spans through `map`.
///
/// Spans are clamped to `floor..ceil` so that children always nest inside
/// their parent and never overlap earlier siblings.
pub(crate) fn graft(
    ast: &mut Ast,
    parent: NodeId,
    raw: &RawNode,
    map: &OffsetMap,
    floor: usize,
    ceil: usize,
) -> NodeId {
    let (s, e) = map.span_to_file(raw.start, raw.end).unwrap_or((floor, floor));
    let s = s.clamp(floor, ceil);
    let e = e.clamp(s, ceil);
    let id = ast.push_parsed(parent, raw.kind, s, e, raw.value.clone());
    let mut next_floor = s;
    for child in &raw.children {
        let c = graft(ast, id, child, map, next_floor, e);
        next_floor = ast.span(c).end_offset;
    }
    id
}

/// Builds `raw` as a detached, programmatically created subtree.
pub(crate) fn build_detached(ast: &mut Ast, raw: &RawNode) -> NodeId {
    let id = ast.new_node(raw.kind, raw.value.clone());
    for (i, child) in raw.children.iter().enumerate() {
        let c = build_detached(ast, child);
        ast.add_child(id, c, i)
            .expect("fresh detached nodes can always be attached");
    }
    id
}
