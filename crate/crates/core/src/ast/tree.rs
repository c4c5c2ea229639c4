use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::{Annotation, AstError, LineIndex, NodeKind, SourceSpan};

/// Handle of a node inside an [`Ast`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Where a node's text comes from when the tree is reprinted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    /// Parsed from the original file; the span slices its text.
    Source,
    /// Built programmatically and inserted at a zero-width anchor.
    Inserted,
    /// Built programmatically; stands in for the original bytes of its span.
    Replacing,
}

#[derive(Debug, Clone)]
pub(crate) struct NodeData {
    kind: NodeKind,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    span: SourceSpan,
    origin: Origin,
    value: Option<String>,
    annotations: BTreeSet<Annotation>,
    modified: bool,
    lead: Option<String>,
    removed: Vec<(usize, usize)>,
}

/// Unified Dockerfile + shell syntax tree over one source file.
///
/// Nodes live in an arena; removed nodes stay allocated but detached.
#[derive(Debug, Clone)]
pub struct Ast {
    source: Arc<str>,
    line_index: Arc<LineIndex>,
    nodes: Vec<NodeData>,
    root: NodeId,
    escape: char,
}

impl Ast {
    /// Tree holding only a `DockerFile` root covering all of `source`.
    pub fn new(source: impl Into<Arc<str>>, escape: char) -> Self {
        let source = source.into();
        let line_index = Arc::new(LineIndex::new(&source));
        let span = line_index.span(&source, 0, source.len());
        let root = NodeData {
            kind: NodeKind::DockerFile,
            parent: None,
            children: Vec::new(),
            span,
            origin: Origin::Source,
            value: None,
            annotations: BTreeSet::new(),
            modified: false,
            lead: None,
            removed: Vec::new(),
        };
        Ast {
            source,
            line_index,
            nodes: vec![root],
            root: NodeId(0),
            escape,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn escape_char(&self) -> char {
        self.escape
    }

    pub fn line_index(&self) -> &LineIndex {
        &self.line_index
    }

    /// Number of allocated nodes, attached or not.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn data(&self, id: NodeId) -> &NodeData {
        &self.nodes[id.index()]
    }

    fn data_mut(&mut self, id: NodeId) -> &mut NodeData {
        &mut self.nodes[id.index()]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.data(id).kind
    }

    pub fn span(&self, id: NodeId) -> SourceSpan {
        self.data(id).span
    }

    pub fn value(&self, id: NodeId) -> Option<&str> {
        self.data(id).value.as_deref()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.data(id).children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.data(id).parent
    }

    pub fn origin(&self, id: NodeId) -> Origin {
        self.data(id).origin
    }

    pub fn is_modified(&self, id: NodeId) -> bool {
        self.data(id).modified
    }

    /// Layout text printed before an inserted node instead of the default space.
    pub fn lead(&self, id: NodeId) -> Option<&str> {
        self.data(id).lead.as_deref()
    }

    pub(crate) fn removed_ranges(&self, id: NodeId) -> &[(usize, usize)] {
        &self.data(id).removed
    }

    /// Original source bytes covered by the node's span.
    pub fn text(&self, id: NodeId) -> &str {
        &self.source[self.span(id).range()]
    }

    pub fn is_attached(&self, id: NodeId) -> bool {
        self.ancestors_or_self(id).last() == Some(self.root)
    }

    // ---- construction used by the parser -------------------------------

    /// Appends a parsed node as the last child of `parent`.
    pub(crate) fn push_parsed(
        &mut self,
        parent: NodeId,
        kind: NodeKind,
        start: usize,
        end: usize,
        value: Option<String>,
    ) -> NodeId {
        let span = self.line_index.span(&self.source, start, end);
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeData {
            kind,
            parent: Some(parent),
            children: Vec::new(),
            span,
            origin: Origin::Source,
            value,
            annotations: BTreeSet::new(),
            modified: false,
            lead: None,
            removed: Vec::new(),
        });
        self.data_mut(parent).children.push(id);
        id
    }

    // ---- navigation -----------------------------------------------------

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |n| self.parent(*n))
    }

    pub fn ancestors_or_self(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(id), move |n| self.parent(*n))
    }

    /// Nearest strict ancestor of the given kind.
    pub fn get_parent(&self, id: NodeId, kind: NodeKind) -> Option<NodeId> {
        self.ancestors(id).find(|n| self.kind(*n) == kind)
    }

    /// First direct child of the given kind.
    pub fn get_child(&self, id: NodeId, kind: NodeKind) -> Option<NodeId> {
        self.children(id)
            .iter()
            .copied()
            .find(|c| self.kind(*c) == kind)
    }

    pub fn get_children(&self, id: NodeId, kind: NodeKind) -> Vec<NodeId> {
        self.children(id)
            .iter()
            .copied()
            .filter(|c| self.kind(*c) == kind)
            .collect()
    }

    /// First strict descendant of the given kind, in document order.
    pub fn get_element(&self, id: NodeId, kind: NodeKind) -> Option<NodeId> {
        self.descendants(id).into_iter().find(|n| self.kind(*n) == kind)
    }

    pub fn get_elements(&self, id: NodeId, kind: NodeKind) -> Vec<NodeId> {
        self.descendants(id)
            .into_iter()
            .filter(|n| self.kind(*n) == kind)
            .collect()
    }

    /// `id` and all its descendants in document (pre-)order.
    pub fn preorder(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    /// Strict descendants in document order.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut all = self.preorder(id);
        all.remove(0);
        all
    }

    /// Calls `visit` on every node of the subtree accepted by `filter`.
    pub fn iterate(
        &self,
        id: NodeId,
        mut visit: impl FnMut(NodeId),
        filter: impl Fn(NodeId) -> bool,
    ) {
        for n in self.preorder(id) {
            if filter(n) {
                visit(n);
            }
        }
    }

    pub fn index_in_parent(&self, id: NodeId) -> Option<usize> {
        let parent = self.parent(id)?;
        self.children(parent).iter().position(|c| *c == id)
    }

    pub fn next_sibling(&self, id: NodeId) -> Option<NodeId> {
        let parent = self.parent(id)?;
        let idx = self.index_in_parent(id)?;
        self.children(parent).get(idx + 1).copied()
    }

    pub fn prev_sibling(&self, id: NodeId) -> Option<NodeId> {
        let parent = self.parent(id)?;
        let idx = self.index_in_parent(id)?;
        idx.checked_sub(1).map(|i| self.children(parent)[i])
    }

    // ---- annotations ----------------------------------------------------

    pub fn annotations(&self, id: NodeId) -> &BTreeSet<Annotation> {
        &self.data(id).annotations
    }

    /// Adds `tag` to the node's annotation set; annotating twice is a no-op.
    pub fn annotate(&mut self, id: NodeId, tag: Annotation) {
        self.data_mut(id).annotations.insert(tag);
    }

    pub fn has_annotation(&self, id: NodeId, tag: &str) -> bool {
        self.data(id).annotations.iter().any(|a| a.as_str() == tag)
    }

    pub fn clear_annotations(&mut self, id: NodeId) {
        self.data_mut(id).annotations.clear();
    }

    // ---- mutation -------------------------------------------------------

    /// Allocates a detached, programmatically built node. Such nodes are
    /// always `modified`.
    pub fn new_node(&mut self, kind: NodeKind, value: Option<String>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeData {
            kind,
            parent: None,
            children: Vec::new(),
            span: SourceSpan::default(),
            origin: Origin::Inserted,
            value,
            annotations: BTreeSet::new(),
            modified: true,
            lead: None,
            removed: Vec::new(),
        });
        id
    }

    /// Convenience: a new detached node with the given detached children.
    pub fn new_tree(
        &mut self,
        kind: NodeKind,
        value: Option<String>,
        children: Vec<NodeId>,
    ) -> Result<NodeId, AstError> {
        let id = self.new_node(kind, value);
        for (i, c) in children.into_iter().enumerate() {
            self.add_child(id, c, i)?;
        }
        Ok(id)
    }

    pub fn set_lead(&mut self, id: NodeId, lead: Option<String>) {
        self.data_mut(id).lead = lead;
    }

    /// Sets `modified` on `id` and every ancestor.
    pub fn mark_modified(&mut self, id: NodeId) {
        self.data_mut(id).modified = true;
        let ancestors: Vec<NodeId> = self.ancestors(id).collect();
        for n in ancestors {
            if self.data(n).modified {
                break;
            }
            self.data_mut(n).modified = true;
        }
    }

    /// Inserts the detached node `child` as the `position`-th child of `parent`.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        child: NodeId,
        position: usize,
    ) -> Result<(), AstError> {
        if self.parent(child).is_some() || child == self.root {
            return Err(AstError::NotDetached(child));
        }
        if self.ancestors_or_self(parent).any(|a| a == child) {
            return Err(AstError::Cycle(child));
        }
        let count = self.children(parent).len();
        if position > count {
            return Err(AstError::PositionOutOfRange { position, count });
        }

        let prev = position.checked_sub(1).map(|i| self.children(parent)[i]);
        let next = self.children(parent).get(position).copied();

        if self.origin(child) == Origin::Source && self.fits_between(parent, prev, next, child) {
            let span = self.span(child);
            self.data_mut(parent)
                .removed
                .retain(|r| *r != (span.start_offset, span.end_offset));
        } else {
            let anchor = match prev {
                Some(p) => self.span(p).end_offset,
                None => self.span(parent).start_offset,
            };
            let anchor = self
                .line_index
                .span(&self.source, anchor, anchor);
            self.convert_to_inserted(child, anchor);
        }

        self.data_mut(child).parent = Some(parent);
        self.data_mut(parent).children.insert(position, child);
        self.mark_modified(parent);
        Ok(())
    }

    fn fits_between(
        &self,
        parent: NodeId,
        prev: Option<NodeId>,
        next: Option<NodeId>,
        child: NodeId,
    ) -> bool {
        let span = self.span(child);
        let parent_span = self.span(parent);
        self.origin(parent) == Origin::Source
            && parent_span.contains(&span)
            && prev.is_none_or(|p| self.span(p).end_offset <= span.start_offset)
            && next.is_none_or(|n| span.end_offset <= self.span(n).start_offset)
    }

    fn convert_to_inserted(&mut self, id: NodeId, anchor: SourceSpan) {
        for n in self.preorder(id) {
            let data = self.data_mut(n);
            if data.origin != Origin::Inserted || n == id {
                data.origin = Origin::Inserted;
            }
            data.span = anchor;
            data.modified = true;
            data.removed.clear();
        }
    }

    /// Puts the detached node `new` where `old` was; `old` becomes detached.
    pub fn replace_node(&mut self, old: NodeId, new: NodeId) -> Result<(), AstError> {
        if old == self.root {
            return Err(AstError::RootMutation);
        }
        if self.parent(new).is_some() || new == self.root {
            return Err(AstError::NotDetached(new));
        }
        let parent = self.parent(old).ok_or(AstError::Detached(old))?;
        let idx = self.index_in_parent(old).expect("attached node has an index");
        let span = self.span(old);
        let (origin, lead) = match self.origin(old) {
            Origin::Source | Origin::Replacing => (Origin::Replacing, None),
            Origin::Inserted => (Origin::Inserted, self.data(old).lead.clone()),
        };
        for n in self.preorder(new) {
            let data = self.data_mut(n);
            data.span = span;
            data.modified = true;
            data.removed.clear();
            data.origin = Origin::Inserted;
        }
        self.data_mut(new).origin = origin;
        self.data_mut(new).lead = lead;
        self.data_mut(new).parent = Some(parent);
        self.data_mut(parent).children[idx] = new;
        self.data_mut(old).parent = None;
        self.mark_modified(new);
        Ok(())
    }

    /// Detaches `id` from the tree; its original bytes are dropped on reprint.
    pub fn remove_node(&mut self, id: NodeId) -> Result<(), AstError> {
        if id == self.root {
            return Err(AstError::RootMutation);
        }
        let parent = self.parent(id).ok_or(AstError::Detached(id))?;
        self.data_mut(parent).children.retain(|c| *c != id);
        if self.origin(id) != Origin::Inserted {
            let span = self.span(id);
            self.data_mut(parent)
                .removed
                .push((span.start_offset, span.end_offset));
        }
        self.data_mut(id).parent = None;
        self.mark_modified(parent);
        Ok(())
    }

    /// Sets `modified` on every node; used to force a full reprint walk.
    pub fn mark_all_modified(&mut self) {
        for data in &mut self.nodes {
            data.modified = true;
        }
    }

    /// True when nothing in the tree has been modified.
    pub fn is_pristine(&self) -> bool {
        !self.data(self.root).modified
    }
}

/// Compares kind, value and children recursively; ignores spans,
/// annotations and modification flags.
pub fn structurally_equal(a: &Ast, a_id: NodeId, b: &Ast, b_id: NodeId) -> bool {
    a.kind(a_id) == b.kind(b_id)
        && a.value(a_id) == b.value(b_id)
        && a.children(a_id).len() == b.children(b_id).len()
        && a
            .children(a_id)
            .iter()
            .zip(b.children(b_id))
            .all(|(x, y)| structurally_equal(a, *x, b, *y))
}

/// Like [`structurally_equal`] but also requires identical annotation sets.
pub fn annotated_equal(a: &Ast, a_id: NodeId, b: &Ast, b_id: NodeId) -> bool {
    a.kind(a_id) == b.kind(b_id)
        && a.value(a_id) == b.value(b_id)
        && a.annotations(a_id) == b.annotations(b_id)
        && a.children(a_id).len() == b.children(b_id).len()
        && a
            .children(a_id)
            .iter()
            .zip(b.children(b_id))
            .all(|(x, y)| annotated_equal(a, *x, b, *y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (Ast, NodeId, NodeId, NodeId) {
        let src = "RUN npm cache clean";
        let mut ast = Ast::new(src, '\\');
        let root = ast.root();
        let run = ast.push_parsed(root, NodeKind::Run, 0, 19, None);
        let cmd = ast.push_parsed(run, NodeKind::BashCommand, 4, 19, None);
        let name = ast.push_parsed(cmd, NodeKind::BashCommandName, 4, 7, None);
        ast.push_parsed(name, NodeKind::BashLiteral, 4, 7, Some("npm".into()));
        let a1 = ast.push_parsed(cmd, NodeKind::BashCommandArgs, 8, 13, None);
        ast.push_parsed(a1, NodeKind::BashLiteral, 8, 13, Some("cache".into()));
        let a2 = ast.push_parsed(cmd, NodeKind::BashCommandArgs, 14, 19, None);
        ast.push_parsed(a2, NodeKind::BashLiteral, 14, 19, Some("clean".into()));
        (ast, run, cmd, a2)
    }

    #[test]
    fn navigation() {
        let (ast, run, cmd, a2) = small();
        assert_eq!(ast.get_parent(a2, NodeKind::BashCommand), Some(cmd));
        assert_eq!(ast.get_parent(a2, NodeKind::Run), Some(run));
        assert_eq!(ast.get_children(cmd, NodeKind::BashCommandArgs).len(), 2);
        let leaf = ast.children(a2)[0];
        assert_eq!(ast.get_child(leaf, NodeKind::BashLiteral), None);
        assert_eq!(ast.get_element(ast.root(), NodeKind::BashCommand), Some(cmd));
        assert_eq!(ast.get_elements(ast.root(), NodeKind::BashLiteral).len(), 3);
    }

    #[test]
    fn add_child_dirties_ancestors() {
        let (mut ast, run, cmd, _) = small();
        let arg = ast.new_node(NodeKind::BashCommandArgs, None);
        let lit = ast.new_node(NodeKind::BashLiteral, Some("--force".into()));
        ast.add_child(arg, lit, 0).unwrap();
        ast.add_child(cmd, arg, 3).unwrap();
        assert!(ast.is_modified(arg));
        assert!(ast.is_modified(cmd));
        assert!(ast.is_modified(run));
        assert!(ast.is_modified(ast.root()));
        assert_eq!(ast.span(arg).start_offset, 19);
        assert!(ast.span(arg).is_empty());
        assert_eq!(ast.origin(arg), Origin::Inserted);
    }

    #[test]
    fn root_cannot_be_replaced_or_removed() {
        let (mut ast, ..) = small();
        let root = ast.root();
        let n = ast.new_node(NodeKind::Comment, None);
        assert_eq!(ast.replace_node(root, n), Err(AstError::RootMutation));
        assert_eq!(ast.remove_node(root), Err(AstError::RootMutation));
    }

    #[test]
    fn remove_then_reinsert_is_structural_identity() {
        let (mut ast, _, cmd, a2) = small();
        let before = ast.clone();
        let idx = ast.index_in_parent(a2).unwrap();
        ast.remove_node(a2).unwrap();
        assert_eq!(ast.children(cmd).len(), 2);
        ast.add_child(cmd, a2, idx).unwrap();
        assert!(structurally_equal(&before, before.root(), &ast, ast.root()));
        assert_eq!(ast.origin(a2), Origin::Source);
        assert!(ast.removed_ranges(cmd).is_empty());
        assert!(ast.is_modified(cmd));
        assert!(!before.is_modified(cmd));
    }

    #[test]
    fn position_out_of_range() {
        let (mut ast, _, cmd, _) = small();
        let n = ast.new_node(NodeKind::BashCommandArgs, None);
        assert_eq!(
            ast.add_child(cmd, n, 9),
            Err(AstError::PositionOutOfRange { position: 9, count: 3 })
        );
    }

    #[test]
    fn annotate_is_idempotent() {
        let (mut ast, _, cmd, _) = small();
        assert!(!ast.has_annotation(cmd, "NPM-CACHE-CLEAN"));
        let tag = Annotation::new("NPM-CACHE-CLEAN").unwrap();
        ast.annotate(cmd, tag.clone());
        ast.annotate(cmd, tag);
        assert!(ast.has_annotation(cmd, "NPM-CACHE-CLEAN"));
        assert_eq!(ast.annotations(cmd).len(), 1);
        assert!(!ast.is_modified(cmd));
    }
}
