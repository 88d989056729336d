//! Formula and module-file syntax.

pub mod ast;
pub mod format;
pub mod lexer;
pub mod module;
pub mod parser;

pub use ast::*;
pub use format::{format, format_cell};
pub use lexer::{tokenize, tokenize_with_comments, LexError, Token, TokenKind};
pub use module::{parse_module, Definition, DocBlock, Example, Module, ModuleError, ParamDoc, Revision};
pub use parser::{parse_address, parse_formula, ParseError, MAX_LAMBDA_PARAMS};
