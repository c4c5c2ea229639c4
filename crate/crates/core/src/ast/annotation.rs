use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::AstError;

/// Structural tag attached to a node, e.g. `APT-GET-INSTALL` or `PACKAGE`.
///
/// Tags are uppercase alphanumeric words joined by single dashes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Annotation(Arc<str>);

impl Annotation {
    pub fn new(tag: &str) -> Result<Self, AstError> {
        if Self::is_valid(tag) {
            Ok(Annotation(Arc::from(tag)))
        } else {
            Err(AstError::InvalidTag(tag.to_string()))
        }
    }

    pub fn is_valid(tag: &str) -> bool {
        !tag.is_empty()
            && tag.split('-').all(|word| {
                !word.is_empty()
                    && word
                        .bytes()
                        .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
            })
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Annotation {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}
