//! Statement splitting and argument helpers shared by the imperative-language
//! recognizers. Nothing here understands the host language beyond strings,
//! comments and bracket nesting.

use std::ops::Range;

use regex::Regex;
use std::sync::LazyLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentStyle {
    /// `//` line comments and `/* */` blocks (JavaScript, C#).
    CLike,
    /// `#` line comments (Python).
    Hash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Code,
    /// A `@key value` comment marker (`@class`, `@material`) that applies to
    /// the next construction.
    Marker(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub text: String,
    pub span: Range<usize>,
}

static MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*@(class|material)\s+(.+?)\s*$").expect("valid regex"));

/// Splits source text into statements at `;`, newlines, and (for C-like
/// languages) braces, but only outside strings and parentheses/brackets.
/// Comments are dropped except for `@class`/`@material` markers.
pub fn statements(src: &str, style: CommentStyle) -> Vec<Stmt> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_start = 0usize;
    let mut depth: usize = 0;
    let mut i = 0usize;

    let flush = |cur: &mut String, start: usize, end: usize, out: &mut Vec<Stmt>| {
        let t = cur.trim();
        if !t.is_empty() {
            out.push(Stmt {
                kind: StmtKind::Code,
                text: t.to_string(),
                span: start..end,
            });
        }
        cur.clear();
    };

    while i < bytes.len() {
        let c = bytes[i];
        // strings
        if c == b'"' || c == b'\'' || (c == b'`' && style == CommentStyle::CLike) {
            let quote = c;
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != quote {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                if bytes[i.min(bytes.len() - 1)] == b'\n' && quote != b'`' {
                    break; // unterminated single-line string
                }
                i += 1;
            }
            // closing quote included; an unterminated string stops before the newline
            let end = if i < bytes.len() && bytes[i] == quote {
                i + 1
            } else {
                i.min(bytes.len())
            };
            cur.push_str(&src[start..end]);
            i = end;
            continue;
        }
        // comments
        let line_comment = match style {
            CommentStyle::CLike => c == b'/' && bytes.get(i + 1) == Some(&b'/'),
            CommentStyle::Hash => c == b'#',
        };
        if line_comment {
            let start = i;
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            let body = src[start..i].trim_start_matches(['/', '#']);
            if let Some(m) = MARKER.captures(body) {
                flush(&mut cur, cur_start, start, &mut out);
                out.push(Stmt {
                    kind: StmtKind::Marker(m[1].to_string(), m[2].trim().to_lowercase()),
                    text: body.trim().to_string(),
                    span: start..i,
                });
                cur_start = i;
            }
            continue;
        }
        if style == CommentStyle::CLike && c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                i += 1;
            }
            i = (i + 2).min(bytes.len());
            cur.push(' ');
            continue;
        }
        // python line continuation
        if style == CommentStyle::Hash && c == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
            i += 2;
            cur.push(' ');
            continue;
        }
        match c {
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth = depth.saturating_sub(1),
            _ => {}
        }
        let terminator = depth == 0
            && (c == b';'
                || c == b'\n'
                || (style == CommentStyle::CLike && (c == b'{' || c == b'}')));
        if terminator {
            flush(&mut cur, cur_start, i, &mut out);
            i += 1;
            cur_start = i;
            continue;
        }
        if cur.is_empty() {
            cur_start = i;
        }
        // push the full UTF-8 character
        let ch_len = utf8_len(c);
        let end = (i + ch_len).min(bytes.len());
        cur.push_str(&src[i..end]);
        i = end;
    }
    flush(&mut cur, cur_start, bytes.len(), &mut out);
    out
}

fn utf8_len(first: u8) -> usize {
    match first {
        b if b < 0x80 => 1,
        b if b >= 0xF0 => 4,
        b if b >= 0xE0 => 3,
        b if b >= 0xC0 => 2,
        _ => 1,
    }
}

/// Splits a call's argument list at top-level commas.
pub fn split_args(args: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut prev = '\0';
    for ch in args.chars() {
        if let Some(q) = quote {
            cur.push(ch);
            if ch == q && prev != '\\' {
                quote = None;
            }
            prev = ch;
            continue;
        }
        match ch {
            '"' | '\'' => {
                quote = Some(ch);
                cur.push(ch);
            }
            '(' | '[' | '{' => {
                depth += 1;
                cur.push(ch);
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(ch),
        }
        prev = ch;
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Given text starting right after an opening parenthesis, returns the slice
/// up to the matching close and the remainder after it.
pub fn balanced(after_open: &str) -> Option<(&str, &str)> {
    let mut depth = 1usize;
    let mut quote: Option<char> = None;
    let mut prev = '\0';
    for (i, ch) in after_open.char_indices() {
        if let Some(q) = quote {
            if ch == q && prev != '\\' {
                quote = None;
            }
            prev = ch;
            continue;
        }
        match ch {
            '"' | '\'' => quote = Some(ch),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&after_open[..i], &after_open[i + 1..]));
                }
            }
            _ => {}
        }
        prev = ch;
    }
    None
}

/// Positional and keyword arguments of a call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallArgs {
    pub positional: Vec<String>,
    pub keyword: Vec<(String, String)>,
}

static KWARG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z_]\w*)\s*=\s*([^=].*)$").expect("valid regex"));

impl CallArgs {
    pub fn parse(args: &str) -> Self {
        let mut out = CallArgs::default();
        for a in split_args(args) {
            if a.is_empty() {
                continue;
            }
            if let Some(c) = KWARG.captures(&a) {
                out.keyword
                    .push((c[1].to_string(), c[2].trim().to_string()));
            } else {
                out.positional.push(a);
            }
        }
        out
    }

    pub fn get(&self, name: &str, position: usize) -> Option<&str> {
        self.keyword
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .or_else(|| self.positional.get(position).map(String::as_str))
    }

    pub fn kw(&self, name: &str) -> Option<&str> {
        self.keyword
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

/// Strips surrounding quotes from a string literal.
pub fn unquote(s: &str) -> Option<&str> {
    let s = s.trim();
    let b = s.as_bytes();
    if b.len() >= 2 && (b[0] == b'"' || b[0] == b'\'') && b[b.len() - 1] == b[0] {
        Some(&s[1..s.len() - 1])
    } else {
        None
    }
}
