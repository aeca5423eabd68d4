//! The s-expression protocol definition language: `defprotocol` with
//! `defrole` and `defrule`, and `defskeleton` with `defstrand`,
//! `deflistener`, `non-orig` and `neq`.

mod ast;
mod parse;
mod print;
mod sexp;
mod validate;

use std::fmt;

use thiserror::Error;

use crate::term::SortError;

pub use ast::*;
pub use parse::{parse, parse_with, term as parse_term};
pub use print::{print, print_protocol, print_skeleton};
pub use sexp::{read_all, Pos, Sexp};
pub use validate::{rule_shape, validate, validate_file, validate_skeleton, Diagnostic, RuleShape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unbalanced parentheses: {0}")]
    Unbalanced(String),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("empty form")]
    EmptyForm,
    #[error("unknown form `{0}`")]
    UnknownForm(String),
    #[error("unsupported form `{0}`")]
    UnsupportedForm(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("{0}")]
    Sort(SortError),
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, pos: Pos) -> ParseError {
        ParseError { kind, pos }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.kind)
    }
}

impl std::error::Error for ParseError {}
