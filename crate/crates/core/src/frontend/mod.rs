//! Lexer, parser, and pretty printer for `.psm` grammars and attribute files.

pub mod ast;
pub mod attributes;
pub mod lexer;
pub mod parser;
pub mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use attributes::{parse_attributes, AttributeFile, AttributeGroup, AttributeValue};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_program, parse_program_named};
pub use printer::print_program;

/// 1-based source position.
///
/// All locations compare equal so that syntax trees can be compared
/// structurally regardless of formatting.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unterminated block comment")]
    UnterminatedComment,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("expected {expected}, found {found}")]
    Syntax { expected: String, found: String },
    #[error("`{0}` is not a shape namespace name")]
    UnknownNamespace(String),
    #[error("grammar `{grammar}` must be declared in a file named `{grammar}.psm`, not `{file}`")]
    NameMismatch { grammar: String, file: String },
    #[error("grammar `{0}` has no main method")]
    MissingMain(String),
    #[error("grammar `{0}` declares main more than once")]
    DuplicateMain(String),
    #[error("method `{0}` has no rules block")]
    MissingRules(String),
    #[error("duplicate key `{key}` in attribute group `{group}`")]
    DuplicateKey { group: String, key: String },
    #[error("duplicate attribute group `{0}`")]
    DuplicateGroup(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{loc}: {kind}")]
pub struct ParseError {
    pub loc: Loc,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(loc: Loc, kind: ParseErrorKind) -> Self {
        Self { loc, kind }
    }
}
