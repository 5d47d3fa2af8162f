use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Location of a diagnostic. Line and column are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Semi,
    Arrow,
    FatArrow,
    Define,
    Eq,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::FatArrow => f.write_str("`=>`"),
            Tok::Define => f.write_str("`:=`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '\'')
}

pub fn tokenize(file: &Arc<str>, text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let span = |len: usize| SourceSpan { file: file.clone(), line: lineno + 1, column: i + 1, length: len };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '-' && chars.get(i + 1) == Some(&'-') {
                break;
            }
            if is_ident_start(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(s),
                    span: SourceSpan { file: file.clone(), line: lineno + 1, column: start + 1, length: i - start },
                });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let sp = SourceSpan { file: file.clone(), line: lineno + 1, column: start + 1, length: i - start };
                let n = s
                    .parse()
                    .map_err(|_| ParseError { span: sp.clone(), message: format!("number `{s}` is too large") })?;
                out.push(Token { tok: Tok::Num(n), span: sp });
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, len) = match two.as_str() {
                "->" => (Tok::Arrow, 2),
                "=>" => (Tok::FatArrow, 2),
                ":=" => (Tok::Define, 2),
                _ => match c {
                    '(' => (Tok::LParen, 1),
                    '-' => (Tok::Minus, 1),
                    ')' => (Tok::RParen, 1),
                    '[' => (Tok::LBracket, 1),
                    ']' => (Tok::RBracket, 1),
                    '{' => (Tok::LBrace, 1),
                    '}' => (Tok::RBrace, 1),
                    ':' => (Tok::Colon, 1),
                    ',' => (Tok::Comma, 1),
                    ';' => (Tok::Semi, 1),
                    '=' => (Tok::Eq, 1),
                    other => {
                        return Err(ParseError { span: span(1), message: format!("unexpected character `{other}`") })
                    }
                },
            };
            out.push(Token { tok, span: span(len) });
            i += len;
        }
    }
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { file: file.clone(), line: lines, column: last_len + 1, length: 0 },
    });
    Ok(out)
}
