//! Instruction-level Dockerfile grammar.

use crate::ast::{Ast, NodeKind};

use super::fold::fold;
use super::raw::{graft, RawDiag, RawNode};
use super::shell::ShellParser;
use super::{map_diagnostics, ParseDiagnostic, ParseError, ParseResult, Severity};

const DIRECTIVES: [&str; 3] = ["syntax", "escape", "check"];

const WINDOWS_SHELLS: [&str; 6] = [
    "powershell",
    "powershell.exe",
    "pwsh",
    "pwsh.exe",
    "cmd",
    "cmd.exe",
];

/// Parses raw bytes, rejecting input that is not UTF-8.
pub fn parse_bytes(bytes: &[u8]) -> Result<ParseResult, ParseError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| ParseError::UnsupportedEncoding(e.valid_up_to()))?;
    Ok(parse_dockerfile(text))
}

/// Parses a whole Dockerfile. Never fails: malformed instructions become
/// opaque nodes with an error diagnostic.
pub fn parse_dockerfile(source: &str) -> ParseResult {
    let body_start = if source.starts_with('\u{feff}') { 3 } else { 0 };
    let escape = scan_escape(&source[body_start..]);
    let mut parser = DockerParser {
        source,
        escape,
        windows_shell: false,
        ast: Ast::new(source, escape),
        diagnostics: Vec::new(),
    };
    parser.run(body_start);
    let mut diagnostics = parser.diagnostics;
    diagnostics.sort_by_key(|d| (d.span.start_offset, d.span.end_offset));
    ParseResult {
        ast: parser.ast,
        diagnostics,
        escape_char: escape,
    }
}

/// `(name, value)` of a parser directive line such as `# escape=``.
fn directive(line: &str) -> Option<(String, &str)> {
    let rest = line.strip_prefix('#')?.trim_start_matches([' ', '\t']);
    let name_len = rest
        .bytes()
        .take_while(|b| b.is_ascii_alphabetic())
        .count();
    let name = rest[..name_len].to_ascii_lowercase();
    let value = rest[name_len..].trim_start_matches([' ', '\t']).strip_prefix('=')?;
    DIRECTIVES
        .contains(&name.as_str())
        .then(|| (name, value.trim_matches([' ', '\t'])))
}

fn scan_escape(source: &str) -> char {
    let mut escape = '\\';
    for line in source.split('\n') {
        let line = line.trim_end_matches('\r').trim_start_matches([' ', '\t']);
        match directive(line) {
            Some((name, value)) => {
                if name == "escape" && (value == "`" || value == "\\") {
                    escape = value.chars().next().unwrap_or('\\');
                }
            }
            None => break,
        }
    }
    escape
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim_start_matches([' ', '\t']).trim_end_matches('\r');
    t.is_empty() || t.starts_with('#')
}

fn ends_with_escape(line: &str, escape: char) -> bool {
    line.trim_end_matches([' ', '\t', '\r']).ends_with(escape)
}

struct DockerParser<'a> {
    source: &'a str,
    escape: char,
    windows_shell: bool,
    ast: Ast,
    diagnostics: Vec<ParseDiagnostic>,
}

impl<'a> DockerParser<'a> {
    /// `(end of line excluding "\r\n", start of next line)`.
    fn line_at(&self, pos: usize) -> (usize, usize) {
        let s = self.source;
        match s[pos..].find('\n') {
            Some(i) => {
                let nl = pos + i;
                let end = if nl > pos && s.as_bytes()[nl - 1] == b'\r' {
                    nl - 1
                } else {
                    nl
                };
                (end, nl + 1)
            }
            None => (s.len(), s.len()),
        }
    }

    fn run(&mut self, mut pos: usize) {
        let source = self.source;
        let root = self.ast.root();
        let mut at_top = true;
        while pos < source.len() {
            let (line_end, next) = self.line_at(pos);
            let line = &source[pos..line_end];
            let indent = line.len() - line.trim_start_matches([' ', '\t']).len();
            let start = pos + indent;
            let content = line[indent..].trim_end_matches([' ', '\t']);
            if content.is_empty() {
                at_top = false;
                pos = next;
                continue;
            }
            if content.starts_with('#') {
                let kind = if at_top && directive(content).is_some() {
                    NodeKind::ParserDirective
                } else {
                    at_top = false;
                    NodeKind::Comment
                };
                let end = start + content.len();
                self.ast.push_parsed(root, kind, start, end, Some(content.to_string()));
                if kind == NodeKind::ParserDirective {
                    self.check_directive(content, start, end);
                }
                pos = next;
                continue;
            }
            at_top = false;
            pos = self.instruction(start);
        }
    }

    fn check_directive(&mut self, content: &str, start: usize, end: usize) {
        if let Some((name, value)) = directive(content) {
            if name == "escape" && value != "`" && value != "\\" {
                self.diag(
                    Severity::Error,
                    format!("invalid escape character `{value}`"),
                    start,
                    end,
                );
            }
        }
    }

    fn diag(&mut self, severity: Severity, message: String, start: usize, end: usize) {
        let span = self.ast.line_index().span(self.source, start, end);
        self.diagnostics.push(ParseDiagnostic {
            severity,
            message,
            span,
        });
    }

    /// Parses the instruction starting at `start`; returns where the next
    /// line begins.
    fn instruction(&mut self, start: usize) -> usize {
        let source = self.source;
        let (mut end, mut next) = self.line_at(start);
        while ends_with_escape(&source[start.max(self.line_start(end))..end], self.escape)
            && next < source.len()
        {
            // skip blank and comment lines inside the continuation
            let mut p = next;
            while p < source.len() {
                let (le, ln) = self.line_at(p);
                if !is_blank_or_comment(&source[p..le]) {
                    break;
                }
                p = ln;
            }
            if p >= source.len() {
                break;
            }
            (end, next) = self.line_at(p);
        }
        while end > start && matches!(source.as_bytes()[end - 1], b' ' | b'\t') {
            end -= 1;
        }

        let mut folded = fold(source, start, end, self.escape);
        let mut raw_diags = Vec::new();
        let mut heredoc = false;
        let keyword = leading_word(&folded.text);
        if matches!(
            keyword.to_ascii_uppercase().as_str(),
            "RUN" | "COPY" | "ADD" | "ONBUILD"
        ) {
            let markers = heredoc_markers(&folded.text);
            if !markers.is_empty() {
                heredoc = true;
                let mut body_end = end;
                let mut p = next;
                for (word, strip_tabs) in markers {
                    let mut found = false;
                    while p < source.len() {
                        let (le, ln) = self.line_at(p);
                        let line = &source[p..le];
                        let line = if strip_tabs {
                            line.trim_start_matches('\t')
                        } else {
                            line
                        };
                        body_end = le;
                        p = ln;
                        if line == word {
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        raw_diags.push((
                            Severity::Error,
                            format!("unterminated here-document `{word}`"),
                        ));
                        break;
                    }
                }
                folded.append_verbatim(source, end, body_end);
                end = body_end;
                next = p;
            }
        }

        let mut builder = Builder {
            text: &folded.text,
            windows_shell: self.windows_shell,
            diagnostics: Vec::new(),
        };
        let len = folded.text.len();
        let raw = builder.instruction(0, len, heredoc);
        self.windows_shell = builder.windows_shell;
        let mut diags = builder.diagnostics;
        for (severity, message) in raw_diags {
            diags.push(RawDiag {
                severity,
                message,
                start: 0,
                end: len,
            });
        }
        let root = self.ast.root();
        graft(&mut self.ast, root, &raw, &folded.map, start, end);
        let mapped = map_diagnostics(&self.ast, &folded.map, diags, start, end);
        self.diagnostics.extend(mapped);
        next
    }

    fn line_start(&self, pos: usize) -> usize {
        self.source[..pos].rfind('\n').map_or(0, |i| i + 1)
    }
}

fn leading_word(text: &str) -> &str {
    let n = text.bytes().take_while(|b| b.is_ascii_alphabetic()).count();
    &text[..n]
}

/// Here-document delimiters (`<<EOF`, `<<-"EOF"`) in an instruction line.
fn heredoc_markers(text: &str) -> Vec<(String, bool)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(k) = text[i..].find("<<") {
        let mut j = i + k + 2;
        i = j;
        if b.get(j) == Some(&b'<') {
            i = j + 1;
            continue;
        }
        let strip_tabs = b.get(j) == Some(&b'-');
        if strip_tabs {
            j += 1;
        }
        let quote = b.get(j).copied().filter(|c| *c == b'"' || *c == b'\'');
        if quote.is_some() {
            j += 1;
        }
        let w = j;
        while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_') {
            j += 1;
        }
        if j == w {
            continue;
        }
        if let Some(q) = quote {
            if b.get(j) != Some(&q) {
                continue;
            }
            j += 1;
        }
        out.push((text[w..j - usize::from(quote.is_some())].to_string(), strip_tabs));
        i = j;
    }
    out
}

/// Builds instruction nodes over one folded instruction.
struct Builder<'t> {
    text: &'t str,
    windows_shell: bool,
    diagnostics: Vec<RawDiag>,
}

impl<'t> Builder<'t> {
    fn error(&mut self, message: String, start: usize, end: usize) {
        self.diagnostics.push(RawDiag {
            severity: Severity::Error,
            message,
            start,
            end,
        });
    }

    fn skip_ws(&self, mut pos: usize, end: usize) -> usize {
        let b = self.text.as_bytes();
        while pos < end && matches!(b[pos], b' ' | b'\t' | b'\r' | b'\n') {
            pos += 1;
        }
        pos
    }

    fn opaque(&self, start: usize, end: usize) -> RawNode {
        RawNode::leaf(
            NodeKind::BashOpaque,
            start,
            end,
            Some(self.text[start..end].to_string()),
        )
    }

    fn instruction(&mut self, start: usize, end: usize, heredoc: bool) -> RawNode {
        let text = self.text;
        let kw_end = start + leading_word(&text[start..end]).len();
        let keyword = &text[start..kw_end];
        let delimited = text[kw_end..end]
            .chars()
            .next()
            .is_none_or(char::is_whitespace);
        let kind = NodeKind::from_keyword(keyword).filter(|_| delimited);
        let Some(kind) = kind else {
            if keyword.eq_ignore_ascii_case("MAINTAINER") && delimited {
                self.diagnostics.push(RawDiag {
                    severity: Severity::Warning,
                    message: "MAINTAINER is deprecated; kept verbatim".into(),
                    start,
                    end,
                });
            } else {
                let shown = &text[start..self.word_end(start, end)];
                self.error(format!("unknown instruction `{shown}`"), start, end);
            }
            return self.opaque(start, end);
        };

        let mut pos = self.skip_ws(kw_end, end);
        let mut children = Vec::new();
        match kind {
            NodeKind::Run => {
                pos = self.flags(pos, end, &mut children);
                self.command_payload(pos, end, heredoc, &mut children);
            }
            NodeKind::Cmd | NodeKind::Entrypoint => {
                self.command_payload(pos, end, heredoc, &mut children)
            }
            NodeKind::Shell => match self.exec_form(pos, end) {
                Some(list) => {
                    let program = list
                        .children
                        .first()
                        .and_then(|c| c.value.as_deref())
                        .map(|p| {
                            p.rsplit(['/', '\\'])
                                .next()
                                .unwrap_or(p)
                                .to_ascii_lowercase()
                        });
                    self.windows_shell =
                        program.is_some_and(|p| WINDOWS_SHELLS.contains(&p.as_str()));
                    children.push(list);
                }
                None if pos < end => {
                    self.error("SHELL requires a JSON array".into(), pos, end);
                    children.push(self.opaque(pos, end));
                }
                None => {}
            },
            NodeKind::Healthcheck => {
                pos = self.flags(pos, end, &mut children);
                let word_end = self.word_end(pos, end);
                let word = &text[pos..word_end];
                if word.eq_ignore_ascii_case("CMD") {
                    children.push(self.instruction(pos, end, false));
                } else if word.eq_ignore_ascii_case("NONE") {
                    children.extend(self.words(pos, end));
                } else if pos < end {
                    self.error("HEALTHCHECK expects CMD or NONE".into(), pos, end);
                    children.push(self.opaque(pos, end));
                }
            }
            NodeKind::Onbuild => {
                if pos < end {
                    let inner = self.instruction(pos, end, heredoc);
                    if matches!(inner.kind, NodeKind::Onbuild | NodeKind::From) {
                        self.error(
                            format!("{} is not allowed inside ONBUILD", &text[pos..self.word_end(pos, end)]),
                            pos,
                            end,
                        );
                    }
                    children.push(inner);
                }
            }
            NodeKind::Copy | NodeKind::Add => {
                pos = self.flags(pos, end, &mut children);
                if heredoc && pos < end {
                    children.push(self.opaque(pos, end));
                } else if let Some(list) = self.exec_form(pos, end) {
                    children.push(list);
                } else {
                    children.extend(self.words(pos, end));
                }
            }
            NodeKind::Volume => match self.exec_form(pos, end) {
                Some(list) => children.push(list),
                None => children.extend(self.words(pos, end)),
            },
            NodeKind::From => {
                self.windows_shell = false;
                children.extend(self.words(pos, end));
            }
            _ => children.extend(self.words(pos, end)),
        }
        if children.is_empty() {
            self.error(
                format!("{} requires at least one argument", keyword.to_ascii_uppercase()),
                start,
                end,
            );
        }
        RawNode::new(kind, start, end, None, children)
    }

    fn word_end(&self, mut pos: usize, end: usize) -> usize {
        let b = self.text.as_bytes();
        while pos < end && !b[pos].is_ascii_whitespace() {
            pos += 1;
        }
        pos
    }

    /// Leading `--name=value` options become literal children.
    fn flags(&mut self, mut pos: usize, end: usize, out: &mut Vec<RawNode>) -> usize {
        let b = self.text.as_bytes();
        while pos + 2 < end && b[pos] == b'-' && b[pos + 1] == b'-' && b[pos + 2].is_ascii_alphabetic()
        {
            let e = self.quoted_word_end(pos, end);
            out.push(RawNode::leaf(
                NodeKind::BashLiteral,
                pos,
                e,
                Some(self.text[pos..e].to_string()),
            ));
            pos = self.skip_ws(e, end);
        }
        pos
    }

    fn quoted_word_end(&self, mut pos: usize, end: usize) -> usize {
        let b = self.text.as_bytes();
        while pos < end && !b[pos].is_ascii_whitespace() {
            match b[pos] {
                q @ (b'"' | b'\'') => {
                    pos += 1;
                    while pos < end && b[pos] != q {
                        pos += if b[pos] == b'\\' && q == b'"' { 2 } else { 1 };
                    }
                    pos = (pos + 1).min(end);
                }
                b'\\' => pos = (pos + 2).min(end),
                _ => pos += 1,
            }
        }
        pos
    }

    /// Whitespace-separated arguments, quotes kept together.
    fn words(&self, mut pos: usize, end: usize) -> Vec<RawNode> {
        let mut out = Vec::new();
        loop {
            pos = self.skip_ws(pos, end);
            if pos >= end {
                break;
            }
            let e = self.quoted_word_end(pos, end);
            out.push(RawNode::leaf(
                NodeKind::BashLiteral,
                pos,
                e,
                Some(self.text[pos..e].to_string()),
            ));
            pos = e;
        }
        out
    }

    fn command_payload(&mut self, pos: usize, end: usize, heredoc: bool, out: &mut Vec<RawNode>) {
        if pos >= end {
            return;
        }
        if heredoc {
            out.push(self.opaque(pos, end));
        } else if let Some(list) = self.exec_form(pos, end) {
            out.push(list);
        } else if self.windows_shell {
            out.push(self.opaque(pos, end));
        } else {
            let mut parser = ShellParser::new(self.text, pos, end);
            out.push(parser.script());
            self.diagnostics.append(&mut parser.diagnostics);
        }
    }

    /// A JSON array of strings, or `None` (the payload is then shell form).
    fn exec_form(&self, pos: usize, end: usize) -> Option<RawNode> {
        let b = self.text.as_bytes();
        if pos >= end || b[pos] != b'[' {
            return None;
        }
        let mut items = Vec::new();
        let mut i = self.skip_ws(pos + 1, end);
        if i < end && b[i] == b']' {
            i += 1;
        } else {
            loop {
                i = self.skip_ws(i, end);
                if i >= end || b[i] != b'"' {
                    return None;
                }
                let token_start = i;
                i += 1;
                while i < end && b[i] != b'"' {
                    i += if b[i] == b'\\' { 2 } else { 1 };
                }
                if i >= end {
                    return None;
                }
                i += 1;
                let value: String = serde_json::from_str(&self.text[token_start..i]).ok()?;
                items.push(RawNode::leaf(
                    NodeKind::BashLiteral,
                    token_start,
                    i,
                    Some(value),
                ));
                i = self.skip_ws(i, end);
                match b.get(i) {
                    Some(b',') if i < end => i += 1,
                    Some(b']') if i < end => {
                        i += 1;
                        break;
                    }
                    _ => return None,
                }
            }
        }
        if self.skip_ws(i, end) != end {
            return None;
        }
        Some(RawNode::new(
            NodeKind::BashCommandArgs,
            pos,
            i,
            Some("[".into()),
            items,
        ))
    }
}
