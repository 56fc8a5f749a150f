//! The surface language: an indentation-based program format whose steps are
//! either pure `compute` expressions or `ask` requests to an effect machine.

pub mod ast;
mod error;
mod lexer;
mod parser;
mod unparse;

pub use ast::{AskStep, BinOp, Builtin, ComputeStep, Expr, OnDeny, ProgramAst, Step};
pub use error::{ParseError, ParseErrorKind};
pub use parser::{parse, parse_bytes, MAX_NESTING};
pub use unparse::{unparse, unparse_expr};

/// File extension for program sources.
pub const PROGRAM_EXTENSION: &str = "idp";
