use std::fmt;

use crate::events::Action;
use crate::frames::AtomicFrame;
use crate::portal::ItemExpr;
use crate::profile::{Dim, Rank};
use crate::value::{Kind, Value};
use crate::warehouse::RepoKind;

/// Line and column (1-based, in code points). Spans are not content: they
/// compare equal unconditionally so that AST equality ignores them.
#[derive(Debug, Clone, Copy, Default, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            span: Span::default(),
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub span: Span,
    pub kind: DeclKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedItem {
    pub id: Ident,
    pub values: Vec<(Ident, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricRow {
    pub chain: Vec<(Dim, Ident)>,
    pub values: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    Concept {
        name: Ident,
        fields: Vec<(Ident, Kind)>,
    },
    Individual {
        name: Ident,
        concept: Ident,
        values: Vec<(Ident, Value)>,
    },
    Relation {
        name: Ident,
    },
    Frame {
        frame: AtomicFrame,
    },
    Dimension {
        dim: Dim,
        values: Vec<Ident>,
    },
    Profile {
        name: Ident,
        rank: Rank,
        dims: Vec<(Dim, Ident)>,
    },
    Metric {
        name: Ident,
        order: Vec<Dim>,
        saturates: Option<usize>,
        rows: Vec<MetricRow>,
    },
    Script {
        name: Ident,
        hook: bool,
        trigger: Ident,
        scenario: Vec<AtomicFrame>,
        actions: Vec<Action>,
    },
    Source {
        name: Ident,
        kind: RepoKind,
        items: Vec<SeedItem>,
    },
    Page {
        name: Ident,
        required: Rank,
        conditions: Vec<(Dim, Ident)>,
        items: Vec<ItemExpr>,
    },
}

impl DeclKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            DeclKind::Concept { .. } => "concept",
            DeclKind::Individual { .. } => "individual",
            DeclKind::Relation { .. } => "relation",
            DeclKind::Frame { .. } => "frame",
            DeclKind::Dimension { .. } => "dimension",
            DeclKind::Profile { .. } => "profile",
            DeclKind::Metric { .. } => "metric",
            DeclKind::Script { .. } => "script",
            DeclKind::Source { .. } => "source",
            DeclKind::Page { .. } => "page",
        }
    }
}
