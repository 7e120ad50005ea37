//! Concepts, individuals and their versioned states.
//!
//! A data object is the triple ⟨concept, individual, state⟩: the concept is
//! the shared schema of attribute functions, the individual is an identity
//! selected by the modeller, and the state is one snapshot in the
//! individual's append-only history. State versions double as the
//! valuation index under which formulas are evaluated.

mod store;

pub use store::{SortVariable, Store};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predicate::{Attributes, PredicateError, Shape};
use crate::value::{Kind, Value};

/// Attribute names every individual exposes in addition to its concept's
/// fields. Concepts may not redeclare them.
pub const PSEUDO_FIELDS: [&str; 3] = ["id", "concept", "version"];

pub const INITIAL_CAUSE: &str = "initial";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("concept `{0}` must declare at least one field")]
    EmptyConcept(String),
    #[error("field `{field}` declared twice in concept `{concept}`")]
    DuplicateField { concept: String, field: String },
    #[error("field name `{0}` is reserved")]
    ReservedField(String),
    #[error("concept `{0}` already defined")]
    DuplicateConcept(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("individual `{0}` already exists")]
    DuplicateIndividual(String),
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
    #[error("unknown field `{field}` for concept `{concept}`")]
    UnknownField { concept: String, field: String },
    #[error("field `{field}` expects {expected}, got {found}")]
    KindMismatch {
        field: String,
        expected: Kind,
        found: String,
    },
    #[error("missing value for field `{0}`")]
    MissingField(String),
    #[error("reference `{target}` in field `{field}` does not denote an individual of concept `{concept}`")]
    DanglingReference {
        field: String,
        target: String,
        concept: String,
    },
    #[error("ill-typed predicate: {0}")]
    IllTypedPredicate(#[from] PredicateError),
    #[error("individual `{individual}` has no state version {version}")]
    UnknownVersion { individual: String, version: u64 },
    #[error("`{individual}` belongs to concept `{found}`, expected `{expected}`")]
    ConceptMismatch {
        individual: String,
        expected: String,
        found: String,
    },
    #[error("no individual satisfies the description")]
    NotIndividualized,
    #[error("description is ambiguous: {count} individuals satisfy it")]
    AmbiguousDescription { count: usize },
    #[error("assignment is not total: index `{0}` is unmapped")]
    PartialAssignment(String),
    #[error("assignment maps `{0}`, which is outside the index set")]
    UnknownIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    name: String,
    fields: Vec<(String, Kind)>,
}

impl Concept {
    pub fn new(
        name: impl Into<String>,
        fields: impl IntoIterator<Item = (String, Kind)>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let fields: Vec<(String, Kind)> = fields.into_iter().collect();
        if fields.is_empty() {
            return Err(ModelError::EmptyConcept(name));
        }
        for (i, (f, _)) in fields.iter().enumerate() {
            if PSEUDO_FIELDS.contains(&f.as_str()) {
                return Err(ModelError::ReservedField(f.clone()));
            }
            if fields[..i].iter().any(|(g, _)| g == f) {
                return Err(ModelError::DuplicateField {
                    concept: name,
                    field: f.clone(),
                });
            }
        }
        Ok(Concept { name, fields })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fields(&self) -> &[(String, Kind)] {
        &self.fields
    }

    pub fn kind_of(&self, field: &str) -> Option<&Kind> {
        self.fields.iter().find(|(f, _)| f == field).map(|(_, k)| k)
    }

    /// The attribute shape predicates over this concept are checked against.
    pub fn shape(&self) -> Shape {
        let mut shape: Shape = self.fields.iter().cloned().collect();
        shape.insert("id".into(), Kind::Text);
        shape.insert("concept".into(), Kind::Text);
        shape.insert("version".into(), Kind::Integer);
        shape
    }

    /// Coerces and checks a partial value map against the declared kinds.
    pub fn check_partial(
        &self,
        values: BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, ModelError> {
        values
            .into_iter()
            .map(|(field, v)| {
                let kind = self.kind_of(&field).ok_or_else(|| ModelError::UnknownField {
                    concept: self.name.clone(),
                    field: field.clone(),
                })?;
                let found = format!("{v}");
                let v = v.coerce_to(kind).ok_or_else(|| ModelError::KindMismatch {
                    field: field.clone(),
                    expected: kind.clone(),
                    found,
                })?;
                Ok((field, v))
            })
            .collect()
    }

    /// As [`Concept::check_partial`], additionally requiring a value for
    /// every declared field.
    pub fn check_total(
        &self,
        values: BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, ModelError> {
        let values = self.check_partial(values)?;
        if let Some((missing, _)) = self.fields.iter().find(|(f, _)| !values.contains_key(f)) {
            return Err(ModelError::MissingField(missing.clone()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRecord {
    pub version: u64,
    pub values: BTreeMap<String, Value>,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Individual {
    id: String,
    concept: String,
    states: Vec<StateRecord>,
}

impl Individual {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn concept(&self) -> &str {
        &self.concept
    }

    pub fn states(&self) -> &[StateRecord] {
        &self.states
    }

    pub fn current(&self) -> &StateRecord {
        self.states.last().expect("individuals always carry a state")
    }

    pub fn state(&self, version: Version) -> Option<&StateRecord> {
        match version {
            Version::Current => Some(self.current()),
            Version::At(v) => self.states.get(usize::try_from(v).ok()?),
        }
    }

    /// Attribute view of this individual at `version`.
    pub fn view(&self, version: Version) -> Option<IndividualView<'_>> {
        self.state(version).map(|state| IndividualView {
            individual: self,
            state,
        })
    }

    pub fn data_object(&self, version: Version) -> Option<DataObject> {
        self.state(version).map(|s| DataObject {
            concept: self.concept.clone(),
            individual: self.id.clone(),
            state: s.clone(),
        })
    }
}

/// Valuation index selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Version {
    #[default]
    Current,
    At(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct IndividualView<'a> {
    individual: &'a Individual,
    state: &'a StateRecord,
}

impl IndividualView<'_> {
    pub fn state(&self) -> &StateRecord {
        self.state
    }
}

impl Attributes for IndividualView<'_> {
    fn attribute(&self, name: &str) -> Option<Value> {
        match name {
            "id" => Some(Value::Text(self.individual.id.clone())),
            "concept" => Some(Value::Text(self.individual.concept.clone())),
            "version" => Some(Value::Integer(self.state.version as i64)),
            _ => self.state.values.get(name).cloned(),
        }
    }
}

/// The ⟨concept, individual, state⟩ triple as a detached value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataObject {
    pub concept: String,
    pub individual: String,
    pub state: StateRecord,
}

impl Attributes for DataObject {
    fn attribute(&self, name: &str) -> Option<Value> {
        match name {
            "id" => Some(Value::Text(self.individual.clone())),
            "concept" => Some(Value::Text(self.concept.clone())),
            "version" => Some(Value::Integer(self.state.version as i64)),
            _ => self.state.values.get(name).cloned(),
        }
    }
}
