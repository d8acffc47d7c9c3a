//! Recursive descent parser for C||.

use thiserror::Error;

use super::lexer::{tokenize, Pos, Token, TokenKind};
use super::{BinOp, Expr, LValue, SourceProgram, Statement};
use crate::model::{Definition, Value};

/// Parse error, carrying the source position it was raised at.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: unexpected character `{ch}`")]
    Lex { pos: Pos, ch: char },
    #[error("{pos}: integer literal `{text}` out of range")]
    IntOutOfRange { pos: Pos, text: String },
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: duplicate parameter `{name}` in definition of `{def}`")]
    DuplicateParam { pos: Pos, name: String, def: String },
}

pub(super) struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    pub(super) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(src)?,
            idx: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn peek_ahead(&self) -> &TokenKind {
        let i = (self.idx + 1).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            pos: tok.pos,
            expected: expected.to_string(),
            found: tok.kind.describe(),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<(String, Pos), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(_) => {
                let tok = self.advance();
                match tok.kind {
                    TokenKind::Ident(name) => Ok((name, tok.pos)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.error(expected)),
        }
    }

    pub(super) fn parse_program(&mut self) -> Result<SourceProgram, ParseError> {
        let mut definitions = Vec::new();
        while self.peek().kind == TokenKind::KwProc {
            definitions.push(self.parse_definition()?);
        }
        self.expect(TokenKind::KwMain, "`proc` or `main`")?;
        self.expect(TokenKind::ParBars, "`||`")?;
        let main = self.parse_paren_list()?;
        self.expect(TokenKind::Eof, "end of input")?;
        Ok(SourceProgram { definitions, main })
    }

    pub(super) fn parse_single_statement(&mut self) -> Result<Statement, ParseError> {
        let stmt = self.parse_statement()?;
        self.expect(TokenKind::Eof, "end of input")?;
        Ok(stmt)
    }

    fn parse_definition(&mut self) -> Result<Definition, ParseError> {
        self.expect(TokenKind::KwProc, "`proc`")?;
        let (name, _) = self.expect_ident("procedure name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                let (param, pos) = self.expect_ident("parameter name")?;
                if params.contains(&param) {
                    return Err(ParseError::DuplicateParam {
                        pos,
                        name: param,
                        def: name,
                    });
                }
                params.push(param);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)` or `,`")?;
        self.expect(TokenKind::Equals, "`=`")?;
        let body = self.parse_statement()?;
        Ok(Definition { name, params, body })
    }

    /// `( stmt, ..., stmt )` with an optional empty list.
    fn parse_paren_list(&mut self) -> Result<Vec<Statement>, ParseError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut items = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                items.push(self.parse_statement()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)` or `,`")?;
        Ok(items)
    }

    fn parse_statement(&mut self) -> Result<Statement, ParseError> {
        match &self.peek().kind {
            TokenKind::KwTrue => {
                self.advance();
                Ok(Statement::True)
            }
            TokenKind::KwRepeat => {
                self.advance();
                self.expect(TokenKind::LParen, "`(`")?;
                let body = self.parse_statement()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(Statement::Repeat(Box::new(body)))
            }
            TokenKind::Semi => {
                self.advance();
                Ok(Statement::Seq(self.parse_paren_list()?))
            }
            TokenKind::Hash => {
                self.advance();
                Ok(Statement::Block(self.parse_paren_list()?))
            }
            TokenKind::LParen => self.parse_infix_group(),
            TokenKind::Ident(_) => self.parse_call_or_assign(),
            _ => Err(self.error(
                "statement (`true`, `repeat`, `;`, `#`, `(`, or an identifier)",
            )),
        }
    }

    /// `( G1 ; G2 ; ... )` or `( G1 # G2 # ... )`; a single `( G )` is just G.
    fn parse_infix_group(&mut self) -> Result<Statement, ParseError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let first = self.parse_statement()?;
        match self.peek().kind {
            TokenKind::RParen => {
                self.advance();
                Ok(first)
            }
            TokenKind::Semi => {
                let mut items = vec![first];
                while self.eat(&TokenKind::Semi) {
                    items.push(self.parse_statement()?);
                }
                self.expect(TokenKind::RParen, "`;` or `)`")?;
                Ok(Statement::Seq(items))
            }
            TokenKind::Hash => {
                let mut items = vec![first];
                while self.eat(&TokenKind::Hash) {
                    items.push(self.parse_statement()?);
                }
                self.expect(TokenKind::RParen, "`#` or `)`")?;
                Ok(Statement::Block(items))
            }
            _ => Err(self.error("`;`, `#`, or `)`")),
        }
    }

    fn parse_call_or_assign(&mut self) -> Result<Statement, ParseError> {
        match self.peek_ahead() {
            TokenKind::LParen => {
                let (name, _) = self.expect_ident("identifier")?;
                self.expect(TokenKind::LParen, "`(`")?;
                let mut args = Vec::new();
                if self.peek().kind != TokenKind::RParen {
                    loop {
                        args.push(self.parse_expr()?);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RParen, "`)` or `,`")?;
                Ok(Statement::Call { name, args })
            }
            TokenKind::LBracket | TokenKind::Equals => {
                let target = self.parse_lvalue()?;
                self.expect(TokenKind::Equals, "`=`")?;
                let value = self.parse_expr()?;
                Ok(Statement::Assign { target, value })
            }
            _ => {
                self.advance();
                Err(self.error("`(`, `[`, or `=` after identifier"))
            }
        }
    }

    fn parse_lvalue(&mut self) -> Result<LValue, ParseError> {
        let (name, _) = self.expect_ident("identifier")?;
        if self.eat(&TokenKind::LBracket) {
            let index = self.parse_expr()?;
            self.expect(TokenKind::RBracket, "`]`")?;
            Ok(LValue::Elem { base: name, index })
        } else {
            Ok(LValue::Var(name))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_factor()?;
        while self.eat(&TokenKind::Star) {
            let rhs = self.parse_factor()?;
            lhs = Expr::Binary {
                op: BinOp::Mul,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        match &self.peek().kind {
            TokenKind::Int(n) => {
                let n = *n;
                self.advance();
                Ok(Expr::Lit(Value::Int(n)))
            }
            TokenKind::Ident(_) => {
                let (name, _) = self.expect_ident("identifier")?;
                if self.eat(&TokenKind::LBracket) {
                    let index = self.parse_expr()?;
                    self.expect(TokenKind::RBracket, "`]`")?;
                    Ok(Expr::Elem {
                        base: name,
                        index: Box::new(index),
                    })
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("expression (integer, identifier, or `(`)")),
        }
    }
}
