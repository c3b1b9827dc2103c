//! Query text to core syntax tree: tokens, a recursive-descent parser, a
//! printer that inverts it, and normalization.

pub mod ast;
pub mod corpus;
pub mod lexer;
pub mod normalize;
pub mod parser;

pub use ast::{Axis, Clause, Expr, Literal};
pub use lexer::{tokenize, Token, TokenKind};
pub use normalize::normalize;
pub use parser::parse_query;

/// Parses and normalizes in one step.
pub fn compile_core(text: &str) -> crate::Result<Expr> {
    normalize(parse_query(text)?)
}

#[cfg(test)]
mod props;
