//! Semantic-network language `L = ⟨R, C⟩`: dyadic relation symbols over a
//! set of constants, stored extensionally.
//!
//! A frame `R(a, b)` is evaluated by applying the characteristic function
//! of `R` to the ordered pair, i.e. `‖⟨χ_R, (a, b)⟩‖ = χ_R(a, b)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("undeclared relation `{0}`")]
    UndeclaredRelation(String),
    #[error("undeclared constant `{0}`")]
    UndeclaredConstant(String),
    #[error("malformed pattern: {0}")]
    MalformedPattern(String),
    #[error("`{0}` is already declared")]
    Redeclared(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomicFrame {
    pub relation: String,
    pub subject: String,
    pub object: String,
}

impl AtomicFrame {
    pub fn new(relation: impl Into<String>, subject: impl Into<String>, object: impl Into<String>) -> Self {
        AtomicFrame {
            relation: relation.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }
}

impl fmt::Display for AtomicFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.relation, self.subject, self.object)
    }
}

/// A subject or object position in a query pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Const(String),
    Var(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FramePattern {
    pub relation: String,
    pub subject: Term,
    pub object: Term,
}

impl fmt::Display for FramePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.relation, self.subject, self.object)
    }
}

impl FramePattern {
    /// Whether neither position holds a variable.
    pub fn is_ground(&self) -> bool {
        matches!((&self.subject, &self.object), (Term::Const(_), Term::Const(_)))
    }

    /// Parses `R(a, ?x)`. Relations cannot be variables.
    pub fn parse(text: &str) -> Result<Self, FrameError> {
        let bad = || FrameError::MalformedPattern(text.to_string());
        let (rel, rest) = text.split_once('(').ok_or_else(bad)?;
        let args = rest.trim().strip_suffix(')').ok_or_else(bad)?;
        let (a, b) = args.split_once(',').ok_or_else(bad)?;
        let rel = rel.trim();
        if rel.starts_with('?') {
            return Err(FrameError::MalformedPattern(format!(
                "relation position cannot hold a variable: {text}"
            )));
        }
        let term = |s: &str| -> Result<Term, FrameError> {
            let s = s.trim();
            let (is_var, name) = match s.strip_prefix('?') {
                Some(v) => (true, v),
                None => (false, s),
            };
            if !is_identifier(name) {
                return Err(bad());
            }
            Ok(if is_var {
                Term::Var(name.to_string())
            } else {
                Term::Const(name.to_string())
            })
        };
        if !is_identifier(rel) {
            return Err(bad());
        }
        Ok(FramePattern {
            relation: rel.to_string(),
            subject: term(a)?,
            object: term(b)?,
        })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Variable name to constant.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLanguage {
    relations: BTreeSet<String>,
    constants: BTreeSet<String>,
    extensions: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl FrameLanguage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_relation(&mut self, name: impl Into<String>) -> Result<(), FrameError> {
        let name = name.into();
        if !self.relations.insert(name.clone()) {
            return Err(FrameError::Redeclared(name));
        }
        self.extensions.insert(name, BTreeSet::new());
        Ok(())
    }

    /// Declares a constant; redeclaring one is harmless.
    pub fn declare_constant(&mut self, name: impl Into<String>) {
        self.constants.insert(name.into());
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }

    pub fn extension(&self, relation: &str) -> Option<&BTreeSet<(String, String)>> {
        self.extensions.get(relation)
    }

    /// Total number of asserted pairs over all relations.
    pub fn len(&self) -> usize {
        self.extensions.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frames(&self) -> impl Iterator<Item = AtomicFrame> + '_ {
        self.extensions.iter().flat_map(|(r, pairs)| {
            pairs
                .iter()
                .map(move |(a, b)| AtomicFrame::new(r.clone(), a.clone(), b.clone()))
        })
    }

    fn check_relation(&self, r: &str) -> Result<(), FrameError> {
        if self.relations.contains(r) {
            Ok(())
        } else {
            Err(FrameError::UndeclaredRelation(r.to_string()))
        }
    }

    fn check_constant(&self, c: &str) -> Result<(), FrameError> {
        if self.constants.contains(c) {
            Ok(())
        } else {
            Err(FrameError::UndeclaredConstant(c.to_string()))
        }
    }

    pub fn check_frame(&self, frame: &AtomicFrame) -> Result<(), FrameError> {
        self.check_relation(&frame.relation)?;
        self.check_constant(&frame.subject)?;
        self.check_constant(&frame.object)
    }

    pub fn assert_frame(&mut self, frame: &AtomicFrame) -> Result<(), FrameError> {
        self.check_frame(frame)?;
        self.extensions
            .get_mut(&frame.relation)
            .expect("declared relations have extensions")
            .insert((frame.subject.clone(), frame.object.clone()));
        Ok(())
    }

    pub fn evaluate_frame(&self, frame: &AtomicFrame) -> Result<bool, FrameError> {
        self.check_frame(frame)?;
        let characteristic = |pair: &(String, String)| self.extensions[&frame.relation].contains(pair);
        Ok(characteristic(&(frame.subject.clone(), frame.object.clone())))
    }

    /// Every binding of the pattern's variables that turns it into a true
    /// frame. An all-constant pattern yields the empty binding when the
    /// frame holds and nothing otherwise.
    pub fn query_frames(&self, pattern: &FramePattern) -> Result<BTreeSet<Binding>, FrameError> {
        self.check_relation(&pattern.relation)?;
        for t in [&pattern.subject, &pattern.object] {
            if let Term::Const(c) = t {
                self.check_constant(c)?;
            }
        }
        let mut out = BTreeSet::new();
        for (a, b) in &self.extensions[&pattern.relation] {
            let mut binding = Binding::new();
            if unify(&pattern.subject, a, &mut binding) && unify(&pattern.object, b, &mut binding) {
                out.insert(binding);
            }
        }
        Ok(out)
    }
}

fn unify(term: &Term, value: &str, binding: &mut Binding) -> bool {
    match term {
        Term::Const(c) => c == value,
        Term::Var(v) => match binding.get(v) {
            Some(bound) => bound == value,
            None => {
                binding.insert(v.clone(), value.to_string());
                true
            }
        },
    }
}
