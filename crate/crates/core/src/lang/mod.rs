//! Surface language: parsing, validation, desugaring and printing.

mod ast;
mod desugar;
mod diag;
mod lexer;
mod parser;
mod pretty;

use std::collections::BTreeMap;

pub use ast::{is_constructor_name, Expr, ExprKind, FunctionDecl, NbrScope, Program, SourcePos};
pub use desugar::{desugar, resolve_constants};
pub use diag::{Diagnostic, DiagnosticKind, ParseErrors};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_expr, validate};
pub use pretty::{expr_to_string, pretty_print};

use crate::value::LocalValue;

/// Parse, desugar and resolve constants: the form the evaluator runs.
pub fn load_program(source: &str, constants: &BTreeMap<String, LocalValue>) -> Result<Program, ParseErrors> {
    let parsed = parse(source)?;
    Ok(resolve_constants(&desugar(&parsed), constants))
}
