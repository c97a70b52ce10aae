//! The CLIPS-subset knowledge-base language: deftemplate, defrule,
//! defquery and top-level assert.

mod ast;
mod lexer;
mod parser;
mod validate;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse_program, ParseError, SyntaxError};
pub use validate::{
    validate_assert, validate_program, validate_query, validate_rule, Diagnostic, DiagnosticKind,
};
