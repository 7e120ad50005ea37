//! The `.pds` schema language: lexer, parser, canonical printer and the
//! loader that installs a parsed schema into an [`Engine`](crate::engine::Engine).

pub mod ast;
pub mod lexer;
mod loader;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{Decl, DeclKind, Ident, MetricRow, Schema, SeedItem, Span};
pub use loader::{load, load_into};
pub use parser::{parse, parse_bytes, parse_predicate, MAX_NESTING};
pub use printer::print;

/// Keywords; none of them may be used as a name.
pub const KEYWORDS: [&str; 36] = [
    "concept", "individual", "relation", "frame", "dimension", "profile", "metric", "order", "saturates", "script",
    "hook", "on", "set", "refresh", "transition", "scenario", "source", "kind", "page", "requires", "when", "item",
    "query", "count", "and", "or", "not", "in", "true", "false", "integer", "real", "text", "boolean", "media", "ref",
];

/// Keywords that open a declaration.
pub const DECL_KEYWORDS: [&str; 10] = [
    "concept", "individual", "relation", "frame", "dimension", "profile", "metric", "script", "source", "page",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
    /// Offending source text, empty at end of input.
    pub lexeme: String,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>, lexeme: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            line: span.line,
            column: span.col,
            lexeme: lexeme.into(),
        }
    }

    /// `path:line:col: severity: message`.
    pub fn render(&self, path: &str) -> String {
        format!("{path}:{}:{}: {}: {}", self.line, self.column, self.severity, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.severity, self.message)
    }
}
