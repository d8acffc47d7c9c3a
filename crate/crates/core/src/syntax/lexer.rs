//! Tokenizer for C|| source text.

use std::fmt;

use super::parser::ParseError;

/// A 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum TokenKind {
    Ident(String),
    Int(i64),
    KwProc,
    KwMain,
    KwRepeat,
    KwTrue,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Plus,
    Minus,
    Star,
    Semi,
    Hash,
    /// The `||` introducing the thread pool.
    ParBars,
    Eof,
}

impl TokenKind {
    pub(super) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::KwProc => "`proc`".into(),
            TokenKind::KwMain => "`main`".into(),
            TokenKind::KwRepeat => "`repeat`".into(),
            TokenKind::KwTrue => "`true`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Hash => "`#`".into(),
            TokenKind::ParBars => "`||`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

pub(super) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let pos = Pos { line, col };
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => break,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' | ')' | '[' | ']' | ',' | '=' | '+' | '-' | '*' | ';' | '#' => {
                bump!();
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    '=' => TokenKind::Equals,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    ';' => TokenKind::Semi,
                    _ => TokenKind::Hash,
                };
                tokens.push(Token { kind, pos });
            }
            '|' => {
                bump!();
                if chars.peek() == Some(&'|') {
                    bump!();
                    tokens.push(Token {
                        kind: TokenKind::ParBars,
                        pos,
                    });
                } else {
                    return Err(ParseError::Lex { pos, ch: '|' });
                }
            }
            '0'..='9' => {
                let mut text = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let value: i64 = text
                    .parse()
                    .map_err(|_| ParseError::IntOutOfRange { pos, text: text.clone() })?;
                tokens.push(Token {
                    kind: TokenKind::Int(value),
                    pos,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        name.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let kind = match name.as_str() {
                    "proc" => TokenKind::KwProc,
                    "main" => TokenKind::KwMain,
                    "repeat" => TokenKind::KwRepeat,
                    "true" => TokenKind::KwTrue,
                    _ => TokenKind::Ident(name),
                };
                tokens.push(Token { kind, pos });
            }
            other => return Err(ParseError::Lex { pos, ch: other }),
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        pos: Pos { line, col },
    });
    Ok(tokens)
}
