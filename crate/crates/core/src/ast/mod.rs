//! The unified tree model: node kinds, spans, annotations, navigation,
//! mutation tracking and pattern queries.

mod annotation;
mod kind;
pub mod query;
mod span;
mod tree;
pub mod words;

pub use annotation::Annotation;
pub use kind::NodeKind;
pub use query::{find, matches, Head, QueryPattern, ValueMatcher};
pub use span::{LineIndex, SourceSpan};
pub use tree::{annotated_equal, structurally_equal, Ast, NodeId, Origin};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("the document root cannot be replaced or removed")]
    RootMutation,
    #[error("node {0:?} is already attached")]
    NotDetached(NodeId),
    #[error("node {0:?} is not attached to a tree")]
    Detached(NodeId),
    #[error("attaching node {0:?} there would create a cycle")]
    Cycle(NodeId),
    #[error("position {position} is out of range for {count} children")]
    PositionOutOfRange { position: usize, count: usize },
    #[error("invalid annotation tag `{0}`")]
    InvalidTag(String),
}
