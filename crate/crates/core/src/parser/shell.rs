//! Recursive-descent parser for the shell subset found in RUN payloads.
//!
//! Works on folded text (no line continuations). Statements outside the
//! subset (`while`, `case`, here-documents, ...) are kept as `BashOpaque`
//! nodes covering exactly their source bytes.

use crate::ast::NodeKind;

use super::raw::{RawDiag, RawNode};
use super::Severity;

const MAX_DEPTH: usize = 64;

const SUDO_VALUE_FLAGS: [&str; 10] = [
    "-u", "-g", "-C", "-D", "-h", "-p", "-r", "-t", "-U", "-T",
];

const SHELLS: [&str; 4] = ["sh", "bash", "dash", "ash"];

enum Fail {
    Unsupported(String),
    Malformed(String),
}

type PResult<T> = Result<T, Fail>;

fn unsupported<T>(what: &str) -> PResult<T> {
    Err(Fail::Unsupported(format!("unsupported shell construct: {what}")))
}

fn malformed<T>(what: &str) -> PResult<T> {
    Err(Fail::Malformed(what.to_string()))
}

fn is_blank(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r')
}

fn is_meta(b: u8) -> bool {
    matches!(b, b';' | b'&' | b'|' | b'(' | b')' | b'<' | b'>' | b'\n')
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

pub(crate) struct ShellParser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    end: usize,
    depth: usize,
    paren_depth: usize,
    pub diagnostics: Vec<RawDiag>,
}

impl<'a> ShellParser<'a> {
    /// Parser over `text[start..end]`; offsets stay relative to `text`.
    pub fn new(text: &'a str, start: usize, end: usize) -> Self {
        ShellParser {
            text,
            bytes: text.as_bytes(),
            pos: start,
            end,
            depth: 0,
            paren_depth: 0,
            diagnostics: Vec::new(),
        }
    }

    /// Parses the whole range into a `BashScript` node.
    pub fn script(&mut self) -> RawNode {
        let start = self.pos;
        match self.parse_list(&[]) {
            Some(list) => RawNode::wrap(NodeKind::BashScript, list),
            None => RawNode::leaf(NodeKind::BashScript, start, start, None),
        }
    }

    fn sub_script(&mut self, start: usize, end: usize) -> RawNode {
        let mut sub = ShellParser::new(self.text, start, end);
        sub.depth = self.depth + 1;
        let node = if sub.depth > MAX_DEPTH {
            sub.pos = end;
            sub.diagnostics.push(RawDiag {
                severity: Severity::Warning,
                message: "nesting too deep".into(),
                start,
                end,
            });
            let list = RawNode::new(
                NodeKind::BashStatementList,
                start,
                end,
                None,
                vec![RawNode::leaf(
                    NodeKind::BashOpaque,
                    start,
                    end,
                    Some(self.text[start..end].to_string()),
                )],
            );
            RawNode::wrap(NodeKind::BashScript, list)
        } else {
            sub.script()
        };
        self.diagnostics.append(&mut sub.diagnostics);
        node
    }

    // ---- low-level scanning ----------------------------------------------

    fn at_end(&self) -> bool {
        self.pos >= self.end
    }

    fn peek(&self) -> Option<u8> {
        self.peek_at(0)
    }

    fn peek_at(&self, n: usize) -> Option<u8> {
        let i = self.pos + n;
        (i < self.end).then(|| self.bytes[i])
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..self.end]
    }

    fn char_len_at(&self, i: usize) -> usize {
        self.text[i..].chars().next().map_or(1, char::len_utf8)
    }

    fn skip_spaces(&mut self) {
        while self.peek().is_some_and(is_blank) {
            self.pos += 1;
        }
    }

    /// Skips blanks and comments, and newlines too when `newlines` is set.
    fn skip_blank(&mut self, newlines: bool) {
        loop {
            match self.peek() {
                Some(b) if is_blank(b) => self.pos += 1,
                Some(b'\n') if newlines => self.pos += 1,
                Some(b'#') => {
                    while self.peek().is_some_and(|b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn word_end_at(&self, i: usize) -> usize {
        let mut j = i;
        while j < self.end && !is_blank(self.bytes[j]) && !is_meta(self.bytes[j]) {
            j += 1;
        }
        j
    }

    /// The unquoted word at the cursor, if it is a reserved word.
    fn reserved_word(&self) -> Option<&'a str> {
        let w = &self.text[self.pos..self.word_end_at(self.pos)];
        const RESERVED: [&str; 21] = [
            "if", "then", "elif", "else", "fi", "for", "do", "done", "while", "until", "case",
            "esac", "select", "function", "{", "}", "!", "[[", "]]", "time", "coproc",
        ];
        RESERVED.contains(&w).then_some(w)
    }

    fn at_word(&self, word: &str) -> bool {
        self.rest().starts_with(word)
            && self
                .peek_at(word.len())
                .is_none_or(|b| is_blank(b) || is_meta(b))
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        self.skip_blank(true);
        if !self.at_word(word) {
            return malformed(&format!("expected `{word}`"));
        }
        self.pos += word.len();
        Ok(())
    }

    // ---- lists -------------------------------------------------------------

    /// Statements joined by operators, up to the end, an unmatched `)`, or
    /// one of `stop` in command position.
    fn parse_list(&mut self, stop: &[&str]) -> Option<RawNode> {
        let mut items: Vec<RawNode> = Vec::new();
        loop {
            self.skip_blank(true);
            if self.at_end() {
                break;
            }
            if self.peek() == Some(b')') {
                if self.paren_depth > 0 {
                    break;
                }
                let start = self.pos;
                self.pos = self.end;
                items.push(self.opaque(
                    start,
                    self.end,
                    Severity::Error,
                    "unexpected `)`".into(),
                ));
                break;
            }
            if stop.iter().any(|w| self.at_word(w)) {
                break;
            }
            let item = self.parse_item();
            items.push(item);

            self.skip_blank(false);
            let rest = self.rest();
            let (kind, len, value) = if rest.starts_with("&&") {
                (NodeKind::BashOperatorAnd, 2, None)
            } else if rest.starts_with("||") {
                (NodeKind::BashOperatorOr, 2, None)
            } else if rest.starts_with("|&") {
                (NodeKind::BashPipe, 2, Some("|&"))
            } else if rest.starts_with('|') {
                (NodeKind::BashPipe, 1, None)
            } else if rest.starts_with(';') {
                (NodeKind::BashOperatorSemicolon, 1, None)
            } else if rest.starts_with('&') {
                (NodeKind::BashOpaque, 1, Some("&"))
            } else {
                continue;
            };
            let start = self.pos;
            self.pos += len;
            items.push(RawNode::leaf(
                kind,
                start,
                self.pos,
                value.map(str::to_string),
            ));
        }
        let first = items.first()?;
        let (start, end) = (first.start, items.last().map_or(first.end, |l| l.end));
        Some(RawNode::new(
            NodeKind::BashStatementList,
            start,
            end,
            None,
            items,
        ))
    }

    /// One statement; falls back to an opaque node on failure.
    fn parse_item(&mut self) -> RawNode {
        let start = self.pos;
        let saved = self.diagnostics.len();
        match self.parse_command() {
            Ok(node) => node,
            Err(fail) => {
                self.diagnostics.truncate(saved);
                self.pos = start;
                let mut end = self.scan_statement_end();
                if end == start {
                    end = self.end;
                }
                while end > start && is_blank(self.bytes[end - 1]) {
                    end -= 1;
                }
                self.pos = end;
                let (severity, message) = match fail {
                    Fail::Unsupported(m) => (Severity::Warning, m),
                    Fail::Malformed(m) => (Severity::Error, m),
                };
                self.opaque(start, end, severity, message)
            }
        }
    }

    fn opaque(&mut self, start: usize, end: usize, severity: Severity, message: String) -> RawNode {
        self.diagnostics.push(RawDiag {
            severity,
            message,
            start,
            end,
        });
        RawNode::leaf(
            NodeKind::BashOpaque,
            start,
            end,
            Some(self.text[start..end].to_string()),
        )
    }

    /// End of the statement starting at the cursor, tracking quotes,
    /// parentheses and compound-command keywords.
    fn scan_statement_end(&self) -> usize {
        let b = self.bytes;
        let mut i = self.pos;
        let mut parens = 0usize;
        let mut keywords = 0usize;
        let mut command_position = true;
        while i < self.end {
            let c = b[i];
            match c {
                b'\\' => {
                    i = (i + 2).min(self.end);
                    command_position = false;
                    continue;
                }
                b'\'' => {
                    i = self.text[i + 1..self.end]
                        .find('\'')
                        .map_or(self.end, |k| i + 1 + k + 1);
                    command_position = false;
                    continue;
                }
                b'"' | b'`' => {
                    let mut j = i + 1;
                    while j < self.end && b[j] != c {
                        j += if b[j] == b'\\' { 2 } else { 1 };
                    }
                    i = (j + 1).min(self.end);
                    command_position = false;
                    continue;
                }
                b'(' => {
                    parens += 1;
                    i += 1;
                    command_position = true;
                    continue;
                }
                b')' => {
                    if parens == 0 && keywords == 0 {
                        break;
                    }
                    parens = parens.saturating_sub(1);
                    i += 1;
                    continue;
                }
                _ if is_blank(c) => {
                    i += 1;
                    continue;
                }
                _ => {}
            }
            if matches!(c, b';' | b'&' | b'|' | b'\n') {
                if parens == 0 && keywords == 0 && !(c == b'&' && b.get(i + 1) == Some(&b'>')) {
                    break;
                }
                i += 1;
                command_position = true;
                continue;
            }
            if matches!(c, b'<' | b'>') {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < self.end
                && !is_blank(b[j])
                && !is_meta(b[j])
                && !matches!(b[j], b'\'' | b'"' | b'`' | b'\\')
            {
                j += 1;
            }
            let word = &self.text[i..j];
            if word == "]]" {
                keywords = keywords.saturating_sub(1);
            }
            if command_position {
                match word {
                    "if" | "case" | "while" | "until" | "for" | "select" | "{" | "[[" => {
                        keywords += 1
                    }
                    "fi" | "esac" | "done" | "}" => keywords = keywords.saturating_sub(1),
                    _ => {}
                }
                command_position = matches!(
                    word,
                    "then" | "do" | "else" | "elif" | "if" | "while" | "until" | "{" | "!" | "time"
                );
            }
            i = j.max(i + 1);
        }
        i.min(self.end)
    }

    // ---- commands ----------------------------------------------------------

    fn parse_command(&mut self) -> PResult<RawNode> {
        self.depth += 1;
        let result = if self.depth > MAX_DEPTH {
            unsupported("nesting too deep")
        } else {
            match self.reserved_word() {
                Some("if") => self.parse_if(),
                Some("for") => self.parse_for(),
                Some(w @ ("then" | "elif" | "else" | "fi" | "do" | "done" | "esac" | "}" | "]]")) => {
                    malformed(&format!("unexpected `{w}`"))
                }
                Some(w) => unsupported(&format!("`{w}`")),
                None if self.peek() == Some(b'(') => {
                    if self.peek_at(1) == Some(b'(') {
                        unsupported("arithmetic command")
                    } else {
                        self.parse_subshell()
                    }
                }
                None => self.parse_simple(),
            }
        };
        self.depth -= 1;
        result
    }

    fn parse_simple(&mut self) -> PResult<RawNode> {
        let mut children: Vec<RawNode> = Vec::new();
        let mut seen_name = false;
        loop {
            self.skip_spaces();
            let Some(c) = self.peek() else { break };
            match c {
                b'\n' | b';' | b'|' | b')' | b'#' => break,
                b'&' if self.peek_at(1) != Some(b'>') => break,
                b'&' | b'<' | b'>' => children.push(self.parse_redirect()?),
                b'0'..=b'9' if self.at_fd_redirect() => children.push(self.parse_redirect()?),
                b'(' => {
                    return if seen_name && children.len() == 1 {
                        unsupported("function definition")
                    } else {
                        malformed("unexpected `(`")
                    };
                }
                _ if !seen_name && self.at_assignment() => children.push(self.parse_assignment()?),
                _ => {
                    let kind = if seen_name {
                        NodeKind::BashCommandArgs
                    } else {
                        NodeKind::BashCommandName
                    };
                    seen_name = true;
                    children.push(self.parse_word(kind)?);
                }
            }
        }
        let (Some(first), Some(last)) = (children.first(), children.last()) else {
            return malformed("expected a command");
        };
        let (start, end) = (first.start, last.end);
        let mut cmd = RawNode::new(NodeKind::BashCommand, start, end, None, children);
        self.expand_wrappers(&mut cmd);
        Ok(cmd)
    }

    /// `sudo cmd ...` gets the embedded command as a nested `BashCommand`;
    /// `sh -c '<script>'` gets its literal payload parsed as a script.
    fn expand_wrappers(&mut self, cmd: &mut RawNode) {
        let Some(ni) = cmd
            .children
            .iter()
            .position(|c| c.kind == NodeKind::BashCommandName)
        else {
            return;
        };
        let Some(name) = cmd.children[ni].literal() else {
            return;
        };
        let base = name.rsplit('/').next().unwrap_or("");
        if base == "sudo" {
            let mut i = ni + 1;
            while let Some(arg) = cmd.children.get(i) {
                if arg.kind != NodeKind::BashCommandArgs {
                    break;
                }
                let Some(text) = arg.literal() else { break };
                if text == "--" {
                    i += 1;
                    break;
                }
                if !text.starts_with('-') || text == "-" {
                    break;
                }
                i += if SUDO_VALUE_FLAGS.contains(&text.as_str()) { 2 } else { 1 };
            }
            if cmd
                .children
                .get(i)
                .is_some_and(|c| c.kind == NodeKind::BashCommandArgs)
            {
                let mut inner = cmd.children.split_off(i);
                inner[0].kind = NodeKind::BashCommandName;
                let start = inner[0].start;
                let end = inner.last().map_or(start, |n| n.end);
                let mut nested = RawNode::new(NodeKind::BashCommand, start, end, None, inner);
                self.expand_wrappers(&mut nested);
                cmd.children.push(nested);
            }
        } else if SHELLS.contains(&base) {
            let flag = cmd.children[ni + 1..].iter().position(|a| {
                a.kind == NodeKind::BashCommandArgs
                    && a.literal().is_some_and(|t| {
                        t.starts_with('-') && !t.starts_with("--") && t.contains('c')
                    })
            });
            let Some(flag) = flag else { return };
            let Some(arg) = cmd.children.get_mut(ni + 1 + flag + 1) else {
                return;
            };
            if arg.kind != NodeKind::BashCommandArgs || arg.children.len() != 1 {
                return;
            }
            let quoted = &arg.children[0];
            if quoted.kind != NodeKind::BashQuotedString || quoted.children.len() != 1 {
                return;
            }
            let lit = &quoted.children[0];
            let plain = match quoted.value.as_deref() {
                Some("'") => true,
                Some("\"") => !self.text[lit.start..lit.end].contains(['\\', '$', '`']),
                _ => false,
            };
            if lit.kind != NodeKind::BashLiteral || !plain {
                return;
            }
            let (s, e) = (lit.start, lit.end);
            let script = self.sub_script(s, e);
            if let Some(arg) = cmd.children.get_mut(ni + 1 + flag + 1) {
                arg.children[0].children = vec![script];
            }
        }
    }

    fn at_fd_redirect(&self) -> bool {
        let mut i = self.pos;
        while i < self.end && self.bytes[i].is_ascii_digit() {
            i += 1;
        }
        i > self.pos && i < self.end && matches!(self.bytes[i], b'<' | b'>')
    }

    fn at_assignment(&self) -> bool {
        let b = self.bytes;
        let mut i = self.pos;
        if i >= self.end || !is_name_start(b[i]) {
            return false;
        }
        while i < self.end && is_name_char(b[i]) {
            i += 1;
        }
        if i < self.end && b[i] == b'+' {
            i += 1;
        }
        i < self.end && b[i] == b'='
    }

    fn parse_assignment(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        let eq = self.rest().find('=').map(|k| self.pos + k).unwrap_or(self.end);
        let name = self.text[start..eq].to_string();
        self.pos = eq + 1;
        if self.peek() == Some(b'(') {
            return unsupported("array assignment");
        }
        let parts = self.parse_word_parts()?;
        Ok(RawNode::new(
            NodeKind::BashVariable,
            start,
            self.pos,
            Some(name),
            parts,
        ))
    }

    fn parse_redirect(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'&') {
            self.pos += 1;
        }
        let rest = self.rest();
        let len = if rest.starts_with("<<<") {
            3
        } else if rest.starts_with("<<") {
            return unsupported("here-document");
        } else if rest.starts_with("<(") || rest.starts_with(">(") {
            return unsupported("process substitution");
        } else if [">>", ">&", "<&", ">|", "<>"].iter().any(|op| rest.starts_with(op)) {
            2
        } else {
            1
        };
        self.pos += len;
        let op = self.text[start..self.pos].to_string();
        self.skip_spaces();
        let parts = self.parse_word_parts()?;
        if parts.is_empty() {
            return malformed("redirection without a target");
        }
        Ok(RawNode::new(
            NodeKind::BashRedirect,
            start,
            self.pos,
            Some(op),
            parts,
        ))
    }

    fn trailing_redirects(&mut self, children: &mut Vec<RawNode>) -> PResult<()> {
        loop {
            let save = self.pos;
            self.skip_spaces();
            let redirect = match self.peek() {
                Some(b'<' | b'>') => true,
                Some(b'&') => self.peek_at(1) == Some(b'>'),
                Some(b'0'..=b'9') => self.at_fd_redirect(),
                _ => false,
            };
            if !redirect {
                self.pos = save;
                return Ok(());
            }
            children.push(self.parse_redirect()?);
        }
    }

    fn parse_subshell(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        self.pos += 1;
        self.paren_depth += 1;
        let list = self.parse_list(&[]);
        self.paren_depth -= 1;
        self.skip_blank(true);
        if self.peek() != Some(b')') {
            return malformed("unterminated subshell");
        }
        self.pos += 1;
        let Some(list) = list else {
            return malformed("empty subshell");
        };
        let mut children = vec![list];
        self.trailing_redirects(&mut children)?;
        let end = children.last().map_or(self.pos, |c| c.end).max(self.pos);
        Ok(RawNode::new(NodeKind::BashSubshell, start, end, None, children))
    }

    fn parse_if(&mut self) -> PResult<RawNode> {
        let mut node = self.parse_if_clause("if")?;
        self.expect_word("fi")?;
        node.end = self.pos;
        self.trailing_redirects(&mut node.children)?;
        node.end = node.children.last().map_or(node.end, |c| c.end.max(node.end));
        Ok(node)
    }

    /// `if`/`elif` clause up to, not including, the closing `fi`.
    fn parse_if_clause(&mut self, keyword: &str) -> PResult<RawNode> {
        let start = self.pos;
        self.pos += keyword.len();
        let Some(cond) = self.parse_list(&["then"]) else {
            return malformed("empty if condition");
        };
        self.expect_word("then")?;
        let Some(body) = self.parse_list(&["elif", "else", "fi"]) else {
            return malformed("empty then branch");
        };
        let mut children = vec![
            RawNode::wrap(NodeKind::BashIfCondition, cond),
            RawNode::wrap(NodeKind::BashIfBody, body),
        ];
        self.skip_blank(true);
        if self.at_word("elif") {
            let nested = self.parse_if_clause("elif")?;
            children.push(RawNode::wrap(NodeKind::BashElseBody, nested));
        } else if self.at_word("else") {
            self.pos += 4;
            let Some(list) = self.parse_list(&["fi"]) else {
                return malformed("empty else branch");
            };
            children.push(RawNode::wrap(NodeKind::BashElseBody, list));
        }
        let end = children.last().map_or(self.pos, |c| c.end);
        Ok(RawNode::new(
            NodeKind::BashIf,
            start,
            end,
            Some(keyword.to_string()),
            children,
        ))
    }

    fn parse_for(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        self.pos += 3;
        self.skip_spaces();
        let name_start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        if self.pos == name_start {
            return if self.peek() == Some(b'(') {
                unsupported("arithmetic for loop")
            } else {
                malformed("expected a loop variable")
            };
        }
        let name = self.text[name_start..self.pos].to_string();
        let mut children = Vec::new();
        self.skip_spaces();
        if self.at_word("in") {
            self.pos += 2;
            loop {
                self.skip_spaces();
                match self.peek() {
                    None | Some(b';' | b'\n') => break,
                    _ => children.push(self.parse_word(NodeKind::BashCommandArgs)?),
                }
            }
        }
        self.skip_spaces();
        if self.peek() == Some(b';') {
            self.pos += 1;
        }
        self.expect_word("do")?;
        let Some(body) = self.parse_list(&["done"]) else {
            return malformed("empty loop body");
        };
        self.expect_word("done")?;
        children.push(body);
        let mut node = RawNode::new(NodeKind::BashFor, start, self.pos, Some(name), children);
        self.trailing_redirects(&mut node.children)?;
        node.end = node.children.last().map_or(node.end, |c| c.end.max(node.end));
        Ok(node)
    }

    // ---- words -------------------------------------------------------------

    fn parse_word(&mut self, kind: NodeKind) -> PResult<RawNode> {
        let start = self.pos;
        let parts = self.parse_word_parts()?;
        if parts.is_empty() {
            return malformed("expected a word");
        }
        Ok(RawNode::new(kind, start, self.pos, None, parts))
    }

    fn parse_word_parts(&mut self) -> PResult<Vec<RawNode>> {
        let mut parts = Vec::new();
        while let Some(c) = self.peek() {
            match c {
                _ if is_blank(c) || is_meta(c) => break,
                b'\'' => parts.push(self.single_quoted()?),
                b'"' => parts.push(self.double_quoted()?),
                b'`' => parts.push(self.backtick()?),
                b'$' => match self.dollar(false)? {
                    Some(node) => parts.push(node),
                    None => {
                        let s = self.pos;
                        self.pos += 1;
                        self.push_literal(&mut parts, s);
                    }
                },
                _ => {
                    let s = self.pos;
                    while let Some(c) = self.peek() {
                        if is_blank(c) || is_meta(c) || matches!(c, b'\'' | b'"' | b'`' | b'$') {
                            break;
                        }
                        if c == b'\\' && self.pos + 1 < self.end {
                            self.pos += 1 + self.char_len_at(self.pos + 1);
                        } else {
                            self.pos += 1;
                        }
                    }
                    self.push_literal(&mut parts, s);
                }
            }
        }
        Ok(parts)
    }

    /// Appends `text[start..pos]` as a literal, merging with a literal
    /// that ends exactly at `start`.
    fn push_literal(&self, parts: &mut Vec<RawNode>, start: usize) {
        if start == self.pos {
            return;
        }
        if let Some(last) = parts.last_mut() {
            if last.kind == NodeKind::BashLiteral && last.end == start {
                last.end = self.pos;
                last.value = Some(self.text[last.start..self.pos].to_string());
                return;
            }
        }
        parts.push(RawNode::leaf(
            NodeKind::BashLiteral,
            start,
            self.pos,
            Some(self.text[start..self.pos].to_string()),
        ));
    }

    fn single_quoted(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        let Some(close) = self.text[start + 1..self.end].find('\'') else {
            return malformed("unterminated single quote");
        };
        let close = start + 1 + close;
        let mut children = Vec::new();
        if close > start + 1 {
            children.push(RawNode::leaf(
                NodeKind::BashLiteral,
                start + 1,
                close,
                Some(self.text[start + 1..close].to_string()),
            ));
        }
        self.pos = close + 1;
        Ok(RawNode::new(
            NodeKind::BashQuotedString,
            start,
            self.pos,
            Some("'".into()),
            children,
        ))
    }

    fn ansi_quoted(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        let mut i = start + 2;
        while i < self.end && self.bytes[i] != b'\'' {
            i += if self.bytes[i] == b'\\' { 2 } else { 1 };
        }
        if i >= self.end {
            return malformed("unterminated $'...' string");
        }
        let mut children = Vec::new();
        if i > start + 2 {
            children.push(RawNode::leaf(
                NodeKind::BashLiteral,
                start + 2,
                i,
                Some(self.text[start + 2..i].to_string()),
            ));
        }
        self.pos = i + 1;
        Ok(RawNode::new(
            NodeKind::BashQuotedString,
            start,
            self.pos,
            Some("$'".into()),
            children,
        ))
    }

    fn double_quoted(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        self.pos += 1;
        let mut parts = Vec::new();
        loop {
            let Some(c) = self.peek() else {
                return malformed("unterminated double quote");
            };
            match c {
                b'"' => {
                    self.pos += 1;
                    break;
                }
                b'`' => parts.push(self.backtick()?),
                b'$' => match self.dollar(true)? {
                    Some(node) => parts.push(node),
                    None => {
                        let s = self.pos;
                        self.pos += 1;
                        self.push_literal(&mut parts, s);
                    }
                },
                _ => {
                    let s = self.pos;
                    while let Some(c) = self.peek() {
                        if matches!(c, b'"' | b'`' | b'$') {
                            break;
                        }
                        if c == b'\\' && self.pos + 1 < self.end {
                            self.pos += 1 + self.char_len_at(self.pos + 1);
                        } else {
                            self.pos += 1;
                        }
                    }
                    self.push_literal(&mut parts, s);
                }
            }
        }
        Ok(RawNode::new(
            NodeKind::BashQuotedString,
            start,
            self.pos,
            Some("\"".into()),
            parts,
        ))
    }

    fn backtick(&mut self) -> PResult<RawNode> {
        let start = self.pos;
        let mut i = start + 1;
        while i < self.end && self.bytes[i] != b'`' {
            i += if self.bytes[i] == b'\\' { 2 } else { 1 };
        }
        if i >= self.end {
            return malformed("unterminated backquote");
        }
        let script = self.sub_script(start + 1, i);
        self.pos = i + 1;
        Ok(RawNode::new(
            NodeKind::BashCommandSubstitution,
            start,
            self.pos,
            Some("`".into()),
            vec![script],
        ))
    }

    /// Expansion starting with `$`, or `None` for a literal dollar sign.
    fn dollar(&mut self, in_double_quotes: bool) -> PResult<Option<RawNode>> {
        let start = self.pos;
        let leaf = |p: &Self, end: usize| {
            RawNode::leaf(
                NodeKind::BashVariable,
                start,
                end,
                Some(p.text[start..end].to_string()),
            )
        };
        match self.peek_at(1) {
            Some(b'(') if self.peek_at(2) == Some(b'(') => {
                let mut depth = 0usize;
                let mut i = start + 3;
                loop {
                    if i >= self.end {
                        return malformed("unterminated arithmetic expansion");
                    }
                    match self.bytes[i] {
                        b'(' => depth += 1,
                        b')' if depth > 0 => depth -= 1,
                        b')' if self.bytes.get(i + 1) == Some(&b')') && i + 1 < self.end => {
                            break;
                        }
                        b')' => return malformed("unbalanced arithmetic expansion"),
                        _ => {}
                    }
                    i += 1;
                }
                self.pos = i + 2;
                Ok(Some(RawNode::leaf(
                    NodeKind::BashOpaque,
                    start,
                    self.pos,
                    Some(self.text[start..self.pos].to_string()),
                )))
            }
            Some(b'(') => {
                self.pos += 2;
                let saved_parens = self.paren_depth;
                self.paren_depth = 1;
                let inner_start = self.pos;
                self.depth += 1;
                let list = if self.depth > MAX_DEPTH {
                    None
                } else {
                    self.parse_list(&[])
                };
                self.depth -= 1;
                self.paren_depth = saved_parens;
                self.skip_blank(true);
                if self.peek() != Some(b')') {
                    return malformed("unterminated command substitution");
                }
                let script = match list {
                    Some(list) => RawNode::wrap(NodeKind::BashScript, list),
                    None => RawNode::leaf(NodeKind::BashScript, inner_start, inner_start, None),
                };
                self.pos += 1;
                Ok(Some(RawNode::new(
                    NodeKind::BashCommandSubstitution,
                    start,
                    self.pos,
                    Some("$(".into()),
                    vec![script],
                )))
            }
            Some(b'{') => {
                let mut depth = 0usize;
                let mut i = start + 1;
                while i < self.end {
                    match self.bytes[i] {
                        b'{' => depth += 1,
                        b'}' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        b'\\' => i += 1,
                        _ => {}
                    }
                    i += 1;
                }
                if i >= self.end {
                    return malformed("unterminated ${...} expansion");
                }
                self.pos = i + 1;
                Ok(Some(leaf(self, self.pos)))
            }
            Some(b'\'') if !in_double_quotes => self.ansi_quoted().map(Some),
            Some(c) if is_name_start(c) => {
                let mut i = start + 1;
                while i < self.end && is_name_char(self.bytes[i]) {
                    i += 1;
                }
                self.pos = i;
                Ok(Some(leaf(self, i)))
            }
            Some(c) if c.is_ascii_digit() || b"@*#?$!-".contains(&c) => {
                self.pos = start + 2;
                Ok(Some(leaf(self, self.pos)))
            }
            _ => Ok(None),
        }
    }
}
