//! Mini-C front end: lexing, parsing, name resolution, typing and record
//! layout. The accepted grammar is described in `docs/grammar.md`.

pub mod ast;
mod check;
mod layout;
mod lexer;
mod parser;
pub mod pretty;

use std::fmt;

pub use ast::*;
pub use layout::{layout, size_align};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DiagnosticKind {
    Syntax,
    Type,
    Unsupported,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Type => "type error",
            DiagnosticKind::Unsupported => "unsupported construct",
        })
    }
}

/// A front-end error with its source position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}: {message}")]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Syntax, pos, message: message.into() }
    }

    pub fn type_error(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Type, pos, message: message.into() }
    }

    pub fn unsupported(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Unsupported, pos, message: message.into() }
    }
}

/// Parse and type-check one mini-C translation unit. Record layouts are
/// filled in on success.
pub fn parse(source: &str) -> Result<Program, Diagnostic> {
    let tokens = lexer::lex(source)?;
    let items = parser::parse_items(tokens)?;
    check::check(items)
}
