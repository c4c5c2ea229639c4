//! Line-continuation folding.
//!
//! Instruction payloads are parsed after removing `<escape><newline>`
//! sequences (and the blank or comment lines Docker skips inside a
//! continued instruction). [`OffsetMap`] translates offsets in the folded
//! text back to offsets in the file.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    folded: usize,
    file: usize,
    len: usize,
}

/// Piecewise-linear map from folded-text offsets to file offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetMap {
    segments: Vec<Segment>,
    folded_len: usize,
    file_start: usize,
}

impl OffsetMap {
    /// Map for a fragment copied verbatim from file offset `base`.
    pub fn identity(base: usize, len: usize) -> Self {
        OffsetMap {
            segments: vec![Segment {
                folded: 0,
                file: base,
                len,
            }],
            folded_len: len,
            file_start: base,
        }
    }

    pub fn folded_len(&self) -> usize {
        self.folded_len
    }

    /// File offset of the byte at folded offset `offset` (or the end of the
    /// fragment when `offset == folded_len`).
    pub fn to_file_start(&self, offset: usize) -> usize {
        let idx = self.segments.partition_point(|s| s.folded + s.len <= offset);
        match self.segments.get(idx) {
            Some(s) if s.folded <= offset => s.file + (offset - s.folded),
            _ => self.end_in_file(),
        }
    }

    /// File offset just past the byte at folded offset `offset - 1`.
    pub fn to_file_end(&self, offset: usize) -> usize {
        if offset == 0 {
            return self.segments.first().map_or(self.file_start, |s| s.file);
        }
        let idx = self.segments.partition_point(|s| s.folded + s.len < offset);
        match self.segments.get(idx) {
            Some(s) if s.folded < offset => s.file + (offset - s.folded),
            _ => self.end_in_file(),
        }
    }

    fn end_in_file(&self) -> usize {
        self.segments
            .last()
            .map_or(self.file_start, |s| s.file + s.len)
    }

    /// File byte range of the folded range `start..end`.
    ///
    /// Continuations that fall inside the range count towards its file length;
    /// those at its edges are excluded.
    pub fn span_to_file(&self, start: usize, end: usize) -> Result<(usize, usize), ParseError> {
        if start > end || end > self.folded_len {
            return Err(ParseError::OutOfRange {
                start,
                end,
                len: self.folded_len,
            });
        }
        if start == end {
            let at = self.to_file_start(start);
            return Ok((at, at));
        }
        Ok((self.to_file_start(start), self.to_file_end(end)))
    }
}

/// A folded payload together with its offset map.
#[derive(Debug, Clone)]
pub struct Folded {
    pub text: String,
    pub map: OffsetMap,
}

impl Folded {
    /// Appends `source[from..to]` unchanged (used for here-document bodies).
    pub fn append_verbatim(&mut self, source: &str, from: usize, to: usize) {
        if from >= to {
            return;
        }
        let segments = &mut self.map.segments;
        match segments.last_mut() {
            Some(last) if last.file + last.len == from => last.len += to - from,
            _ => segments.push(Segment {
                folded: self.text.len(),
                file: from,
                len: to - from,
            }),
        }
        self.text.push_str(&source[from..to]);
        self.map.folded_len = self.text.len();
    }
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim_start_matches([' ', '\t']);
    let t = t.trim_end_matches('\r');
    t.is_empty() || t.starts_with('#')
}

/// Offset of the escape character if `line` ends with it (ignoring
/// trailing blanks and a carriage return).
fn continuation_at(line: &str, escape: char) -> Option<usize> {
    let trimmed = line.trim_end_matches([' ', '\t', '\r']);
    trimmed
        .ends_with(escape)
        .then(|| trimmed.len() - escape.len_utf8())
}

/// Folds `source[start..end]`, removing continuations.
pub fn fold(source: &str, start: usize, end: usize, escape: char) -> Folded {
    let mut text = String::with_capacity(end - start);
    let mut segments: Vec<Segment> = Vec::new();
    let mut keep = |text: &mut String, from: usize, to: usize| {
        if from >= to {
            return;
        }
        match segments.last_mut() {
            Some(last) if last.file + last.len == from => last.len += to - from,
            _ => segments.push(Segment {
                folded: text.len(),
                file: from,
                len: to - from,
            }),
        }
        text.push_str(&source[from..to]);
    };

    let mut pos = start;
    let mut after_continuation = false;
    while pos < end {
        let line_end = source[pos..end].find('\n').map_or(end, |i| pos + i);
        let next = if line_end < end { line_end + 1 } else { end };
        let line = &source[pos..line_end];
        if after_continuation && is_blank_or_comment(line) && line_end < end {
            pos = next;
            continue;
        }
        // a continuation on the fragment's last line has nothing to join
        match continuation_at(line, escape).filter(|_| line_end < end) {
            Some(esc) => {
                keep(&mut text, pos, pos + esc);
                after_continuation = true;
            }
            None => {
                keep(&mut text, pos, next);
                after_continuation = false;
            }
        }
        pos = next;
    }

    let folded_len = text.len();
    Folded {
        text,
        map: OffsetMap {
            segments,
            folded_len,
            file_start: start,
        },
    }
}
