//! Surface syntax for C||: abstract syntax tree, parser, and pretty printer.
//!
//! A source file is a list of procedure definitions followed by the initial
//! thread pool:
//!
//! ```text
//! % mailing-list signup
//! proc signup(person) = (N = N + 1 # list[N] = person)
//!
//! main ||(N = 0, signup(tom), signup(bill))
//! ```
//!
//! Statements admit two spellings for composition: the prefix forms
//! `;(G1, G2)` and `#(G1, G2)`, and the infix forms `(G1 ; G2)` and
//! `(G1 # G2)`. Both parse to the same nodes; the pretty printer always
//! emits the prefix form, so rendering canonicalizes. `%` starts a
//! line comment.

mod lexer;
mod parser;

use std::fmt;

use crate::model::Value;

pub use lexer::Pos;
pub use parser::ParseError;

/// A statement (G-formula). Each element of the main pool is one statement
/// and runs as one thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    /// `true`, the statement that always succeeds.
    True,
    /// A procedure call `p(e1, ..., en)`.
    Call { name: String, args: Vec<Expr> },
    /// An assignment `x = e` or `a[i] = e`.
    Assign { target: LValue, value: Expr },
    /// Sequential composition `;(G1, ..., Gn)`.
    Seq(Vec<Statement>),
    /// Block sequential statement `#(G1, ..., Gn)`: runs atomically.
    Block(Vec<Statement>),
    /// `repeat(G)`: runs G, then repeats.
    Repeat(Box<Statement>),
}

/// The target of an assignment: a plain variable or an array element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Elem { base: String, index: Expr },
}

/// An expression, evaluated against the store by the engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// An immediate value. Integer literals parse to this; symbol literals
    /// only arise from parameter substitution.
    Lit(Value),
    /// A name. Evaluation looks it up in the store; unbound names starting
    /// with a lowercase letter denote symbol constants (`tom`, `bill`).
    Ident(String),
    /// An array element read `a[i]`.
    Elem { base: String, index: Box<Expr> },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

/// A parsed source file: the procedure definitions and the initial pool.
///
/// Source files never carry an initial store; the store starts empty and is
/// populated only by assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub definitions: Vec<crate::model::Definition>,
    pub main: Vec<Statement>,
}

/// Parse a whole `.cpar` source file.
pub fn parse_program(text: &str) -> Result<SourceProgram, ParseError> {
    parser::Parser::new(text)?.parse_program()
}

/// Parse a single statement. Convenience entry point for tests and tools.
pub fn parse_statement(text: &str) -> Result<Statement, ParseError> {
    parser::Parser::new(text)?.parse_single_statement()
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul => 2,
        }
    }
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            _ => 3,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Ident(name) => f.write_str(name),
            Expr::Elem { base, index } => write!(f, "{base}[{index}]"),
            Expr::Binary { op, lhs, rhs } => {
                // Left-associative grammar: parenthesize a right child of
                // equal precedence so the printed tree re-parses unchanged.
                if lhs.precedence() < op.precedence() {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if rhs.precedence() <= op.precedence() {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
        }
    }
}

impl fmt::Display for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LValue::Var(name) => f.write_str(name),
            LValue::Elem { base, index } => write!(f, "{base}[{index}]"),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Statement]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::True => f.write_str("true"),
            Statement::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
            Statement::Assign { target, value } => write!(f, "{target} = {value}"),
            Statement::Seq(items) => {
                f.write_str(";(")?;
                write_list(f, items)?;
                f.write_str(")")
            }
            Statement::Block(items) => {
                f.write_str("#(")?;
                write_list(f, items)?;
                f.write_str(")")
            }
            Statement::Repeat(body) => write!(f, "repeat({body})"),
        }
    }
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for def in &self.definitions {
            writeln!(f, "{def}")?;
        }
        f.write_str("main ||(")?;
        write_list(f, &self.main)?;
        f.write_str(")")
    }
}
