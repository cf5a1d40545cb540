//! Shared lexer for the source language and the GAEL combinator dialect.
//!
//! Both dialects share integers, `#`-primitives, identifiers, the `true` /
//! `false` keywords, parentheses, `:=`, `;` and `--` line comments. The
//! source dialect adds `\` and `.`; GAEL adds the combinators `S`, `K`, `I`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda_ir::Prim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Source,
    Gael,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenClass {
    Identifier,
    Integer,
    Combinator,
    Primitive,
    Punct,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub class: TokenClass,
    pub lexeme: String,
    /// Byte offset of the first character.
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lexical error at {line}:{col} (offset {offset}): {message}")]
pub struct LexError {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_lowercase()
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

/// Keywords are reserved: they lex as identifiers but are not bindable.
pub fn is_keyword(word: &str) -> bool {
    matches!(word, "true" | "false")
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            offset: self.pos,
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }
}

pub fn lex(src: &str, dialect: Dialect) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '-' && cur.peek2() == Some('-') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let (offset, line, col) = (cur.pos, cur.line, cur.col);
        let class = match c {
            '\\' | '.' if dialect == Dialect::Source => {
                cur.bump();
                TokenClass::Punct
            }
            '(' | ')' | ';' => {
                cur.bump();
                TokenClass::Punct
            }
            ':' => {
                cur.bump();
                if cur.peek() != Some('=') {
                    return Err(cur.error("expected `=` after `:`"));
                }
                cur.bump();
                TokenClass::Punct
            }
            'S' | 'K' | 'I' if dialect == Dialect::Gael => {
                cur.bump();
                if cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(cur.error("combinator followed by identifier characters"));
                }
                TokenClass::Combinator
            }
            '#' => {
                cur.bump();
                let start = cur.pos;
                while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    cur.bump();
                }
                let name = &src[start..cur.pos];
                if Prim::from_name(name).is_none() {
                    return Err(LexError {
                        offset,
                        line,
                        col,
                        message: format!("unknown primitive `#{name}`"),
                    });
                }
                TokenClass::Primitive
            }
            '-' | '0'..='9' => {
                cur.bump();
                if c == '-' && !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    return Err(cur.error("expected digit after `-`"));
                }
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                if cur.peek().is_some_and(is_ident_start) {
                    return Err(cur.error("identifier characters directly after integer"));
                }
                TokenClass::Integer
            }
            c if is_ident_start(c) => {
                while cur.peek().is_some_and(is_ident_continue) {
                    cur.bump();
                }
                if is_keyword(&src[offset..cur.pos]) {
                    TokenClass::Keyword
                } else {
                    TokenClass::Identifier
                }
            }
            other => return Err(cur.error(format!("unexpected character `{other}`"))),
        };
        out.push(Token {
            class,
            lexeme: src[offset..cur.pos].to_string(),
            offset,
            line,
            col,
        });
    }
    Ok(out)
}
