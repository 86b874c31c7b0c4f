//! A small C tokenizer: enough structure to find function extents, calls and
//! assertion statements. Comments and preprocessor directives never produce
//! tokens; directives are reported separately.

use std::ops::Range;

use crate::error::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
    /// 0-based physical line of the first byte.
    pub line: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }

    pub fn is_punct(&self, src: &str, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text(src) == p
    }

    pub fn is_ident(&self, src: &str, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text(src) == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub span: Range<usize>,
    pub first_line: usize,
    pub last_line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub directives: Vec<Directive>,
    /// Byte ranges of comments.
    pub comments: Vec<Range<usize>>,
}

const PUNCT3: &[&str] = &["<<=", ">>=", "..."];
const PUNCT2: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=",
    "##",
];

pub fn lex(src: &str) -> Result<Lexed, FrontendError> {
    let bytes = src.as_bytes();
    let mut out = Lexed::default();
    let mut i = 0;
    let mut line = 0;
    // Only whitespace or comments seen since the last newline.
    let mut at_line_start = true;

    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
                at_line_start = true;
            }
            b' ' | b'\t' | b'\r' | 0x0b | 0x0c => i += 1,
            b'\\' if bytes.get(i + 1) == Some(&b'\n') => {
                line += 1;
                i += 2;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                let start = i;
                while i < bytes.len() && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                        line += 1;
                        i += 1;
                    }
                    i += 1;
                }
                out.comments.push(start..i);
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let start = i;
                let start_line = line;
                i += 2;
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(FrontendError::Parse {
                            line: start_line + 1,
                            message: "unterminated block comment".into(),
                        });
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        i += 2;
                        break;
                    }
                    if bytes[i] == b'\n' {
                        line += 1;
                    }
                    i += 1;
                }
                out.comments.push(start..i);
            }
            b'#' if at_line_start => {
                let start = i;
                let first_line = line;
                while i < bytes.len() && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                        line += 1;
                        i += 2;
                        continue;
                    }
                    // A block comment may continue the directive across lines.
                    if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'*') {
                        i += 2;
                        while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                            if bytes[i] == b'\n' {
                                line += 1;
                            }
                            i += 1;
                        }
                        i = (i + 2).min(bytes.len());
                        continue;
                    }
                    i += 1;
                }
                out.directives.push(Directive { span: start..i, first_line, last_line: line });
            }
            b'"' | b'\'' => {
                let start = i;
                let start_line = line;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(FrontendError::Parse {
                                line: start_line + 1,
                                message: "unterminated literal".into(),
                            })
                        }
                        Some(b'\\') => {
                            if bytes.get(i + 1) == Some(&b'\n') {
                                line += 1;
                            }
                            i += 2;
                        }
                        Some(&q) if q == c => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                let kind = if c == b'"' { TokenKind::Str } else { TokenKind::Char };
                out.tokens.push(Token { kind, span: start..i, line: start_line });
                at_line_start = false;
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80) {
                    i += 1;
                }
                // String/char prefixes such as L"..." or u8"...".
                if matches!(bytes.get(i), Some(b'"') | Some(b'\'')) && matches!(&src[start..i], "L" | "u" | "U" | "u8")
                {
                    at_line_start = false;
                    continue_literal(src, start, &mut i, &mut line, &mut out)?;
                    continue;
                }
                out.tokens.push(Token { kind: TokenKind::Ident, span: start..i, line });
                at_line_start = false;
            }
            _ if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i];
                    if matches!(d, b'e' | b'E' | b'p' | b'P') && matches!(bytes.get(i + 1), Some(b'+') | Some(b'-')) {
                        i += 2;
                    } else if d.is_ascii_alphanumeric() || d == b'.' || d == b'_' || d == b'\'' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.tokens.push(Token { kind: TokenKind::Number, span: start..i, line });
                at_line_start = false;
            }
            _ => {
                let rest = &src[i..];
                let len = PUNCT3
                    .iter()
                    .chain(PUNCT2.iter())
                    .find(|p| rest.starts_with(**p))
                    .map(|p| p.len())
                    .unwrap_or_else(|| rest.chars().next().map(char::len_utf8).unwrap_or(1));
                out.tokens.push(Token { kind: TokenKind::Punct, span: i..i + len, line });
                i += len;
                at_line_start = false;
            }
        }
    }
    Ok(out)
}

fn continue_literal(
    src: &str,
    start: usize,
    i: &mut usize,
    line: &mut usize,
    out: &mut Lexed,
) -> Result<(), FrontendError> {
    let bytes = src.as_bytes();
    let quote = bytes[*i];
    let start_line = *line;
    *i += 1;
    loop {
        match bytes.get(*i) {
            None | Some(b'\n') => {
                return Err(FrontendError::Parse { line: start_line + 1, message: "unterminated literal".into() })
            }
            Some(b'\\') => *i += 2,
            Some(&q) if q == quote => {
                *i += 1;
                break;
            }
            Some(_) => *i += 1,
        }
    }
    let kind = if quote == b'"' { TokenKind::Str } else { TokenKind::Char };
    out.tokens.push(Token { kind, span: start..*i, line: start_line });
    Ok(())
}

/// Byte offsets at which each 0-based line starts.
pub fn line_starts(src: &str) -> Vec<usize> {
    std::iter::once(0).chain(src.match_indices('\n').map(|(i, _)| i + 1)).collect()
}

/// Index of the token closing the bracket opened at `open`.
pub fn matching_close(src: &str, tokens: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match tokens[open].text(src) {
        "(" => ("(", ")"),
        "{" => ("{", "}"),
        "[" => ("[", "]"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (idx, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        let s = t.text(src);
        if s == o {
            depth += 1;
        } else if s == c {
            depth -= 1;
            if depth == 0 {
                return Some(idx);
            }
        }
    }
    None
}
