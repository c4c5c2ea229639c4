use serde::Serialize;

/// A region of the original file, in bytes and in 1-based line/column
/// coordinates. Columns count characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct SourceSpan {
    pub start_offset: usize,
    pub end_offset: usize,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    pub fn len(&self) -> usize {
        self.end_offset - self.start_offset
    }

    pub fn is_empty(&self) -> bool {
        self.start_offset == self.end_offset
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.start_offset <= other.start_offset && other.end_offset <= self.end_offset
    }

    pub fn overlaps(&self, other: &SourceSpan) -> bool {
        self.start_offset < other.end_offset && other.start_offset < self.end_offset
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_offset..self.end_offset
    }
}

/// Maps byte offsets of a text to line/column coordinates.
#[derive(Debug, Clone)]
pub struct LineIndex {
    line_starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(
            text.bytes()
                .enumerate()
                .filter(|(_, b)| *b == b'\n')
                .map(|(i, _)| i + 1),
        );
        Self {
            line_starts,
            len: text.len(),
        }
    }

    /// 1-based (line, column) of `offset`. Offsets past the end clamp to the end.
    pub fn position(&self, text: &str, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.len);
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[line];
        let col = text
            .get(start..offset)
            .map(|s| s.chars().count())
            .unwrap_or(offset - start);
        (line + 1, col + 1)
    }

    pub fn span(&self, text: &str, start: usize, end: usize) -> SourceSpan {
        debug_assert!(start <= end, "span start {start} > end {end}");
        let (start_line, start_col) = self.position(text, start);
        let (end_line, end_col) = self.position(text, end);
        SourceSpan {
            start_offset: start,
            end_offset: end,
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let text = "FROM a\nRUN b\n";
        let index = LineIndex::new(text);
        assert_eq!(index.position(text, 0), (1, 1));
        assert_eq!(index.position(text, 7), (2, 1));
        assert_eq!(index.position(text, 9), (2, 3));
        let span = index.span(text, 7, 12);
        assert_eq!((span.start_line, span.end_line, span.end_col), (2, 2, 6));
    }

    #[test]
    fn columns_count_chars() {
        let text = "# é\nRUN x";
        let index = LineIndex::new(text);
        assert_eq!(index.position(text, 4), (1, 4));
    }
}
