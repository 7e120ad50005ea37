//! The metadata level tower.
//!
//! Level 0 is the individual store. A predicate lifted from level `j`
//! becomes an object at level `j + 1` whose extension is the set of
//! level-`j` objects it classifies; level `j + 1` objects can in turn be
//! comprehended and classified from level `j + 2`. Definitions are frozen
//! once lifted, while extension caches are recomputed whenever the data
//! underneath changes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::content_hash;
use crate::model::{Store, Version};
use crate::predicate::{Attributes, Predicate, PredicateError, Shape};
use crate::profile::Rank;
use crate::value::{Kind, Value};

pub const DEFAULT_MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("level {level} exceeds the tower depth {max}")]
    DepthExceeded { level: usize, max: usize },
    #[error("ill-typed predicate: {0}")]
    IllTypedPredicate(#[from] PredicateError),
    #[error("object `{object}` lives at level {found}, expected level {expected}")]
    LevelMismatch {
        object: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{0}` is not a metadata predicate")]
    NotAPredicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPredicate {
    pub id: String,
    pub level: usize,
    pub definition: Predicate,
    pub extension: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub name: String,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub subject: String,
    pub level: usize,
    pub dimensions: Vec<FieldDescriptor>,
    pub integrity_constraints: Vec<String>,
    pub access_rights: Rank,
    /// Browser parameters, user preferences, media types and similar tags.
    pub extras: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StoredMetadata {
    constraints: Vec<String>,
    access_rights: Option<Rank>,
    extras: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaTower {
    max_depth: usize,
    /// `levels[k]` holds the predicates living at level `k + 1`.
    levels: Vec<Vec<MetaPredicate>>,
    records: BTreeMap<String, StoredMetadata>,
}

impl Default for MetaTower {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_DEPTH)
    }
}

/// Attribute view of a level >= 1 object.
struct MetaView<'a>(&'a MetaPredicate);

impl Attributes for MetaView<'_> {
    fn attribute(&self, name: &str) -> Option<Value> {
        match name {
            "id" => Some(Value::Text(self.0.id.clone())),
            "level" => Some(Value::Integer(self.0.level as i64)),
            "extensionSize" => Some(Value::Integer(self.0.extension.len() as i64)),
            _ => None,
        }
    }
}

fn meta_shape() -> Shape {
    [
        ("id".to_string(), Kind::Text),
        ("level".to_string(), Kind::Integer),
        ("extensionSize".to_string(), Kind::Integer),
    ]
    .into_iter()
    .collect()
}

impl MetaTower {
    pub fn new(max_depth: usize) -> Self {
        MetaTower {
            max_depth,
            levels: vec![Vec::new(); max_depth],
            records: BTreeMap::new(),
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn check_level(&self, level: usize) -> Result<(), MetaError> {
        if level > self.max_depth {
            return Err(MetaError::DepthExceeded {
                level,
                max: self.max_depth,
            });
        }
        Ok(())
    }

    /// Attribute shape of objects at `level`. At level 0 this is the union
    /// of every concept's shape; a field declared with different kinds by
    /// different concepts is left out.
    pub fn shape_at(&self, store: &Store, level: usize) -> Result<Shape, MetaError> {
        self.check_level(level)?;
        if level > 0 {
            return Ok(meta_shape());
        }
        let mut shape = Shape::new();
        let mut conflicted = BTreeSet::new();
        for concept in store.concepts() {
            for (name, kind) in concept.shape() {
                match shape.get(&name) {
                    Some(k) if *k != kind => {
                        conflicted.insert(name);
                    }
                    _ => {
                        shape.insert(name, kind);
                    }
                }
            }
        }
        for name in conflicted {
            shape.remove(&name);
        }
        shape.insert("id".into(), Kind::Text);
        shape.insert("concept".into(), Kind::Text);
        shape.insert("version".into(), Kind::Integer);
        Ok(shape)
    }

    pub fn predicates(&self, level: usize) -> &[MetaPredicate] {
        match level {
            0 => &[],
            l => self.levels.get(l - 1).map(Vec::as_slice).unwrap_or(&[]),
        }
    }

    pub fn predicate(&self, id: &str) -> Option<&MetaPredicate> {
        self.levels.iter().flatten().find(|p| p.id == id)
    }

    /// Level an object id lives at, if it exists.
    pub fn level_of(&self, store: &Store, id: &str) -> Option<usize> {
        if store.individual(id).is_some() {
            return Some(0);
        }
        self.predicate(id).map(|p| p.level)
    }

    fn filter_level(&self, store: &Store, level: usize, phi: &Predicate) -> BTreeSet<String> {
        if level == 0 {
            store
                .individuals()
                .filter(|i| phi.evaluate(&i.view(Version::Current).expect("current state")))
                .map(|i| i.id().to_string())
                .collect()
        } else {
            self.predicates(level)
                .iter()
                .filter(|p| phi.evaluate(&MetaView(p)))
                .map(|p| p.id.clone())
                .collect()
        }
    }

    /// Creates (or returns the existing) level-`j + 1` classifier for `phi`.
    pub fn lift(&mut self, store: &Store, level: usize, phi: Predicate) -> Result<&MetaPredicate, MetaError> {
        if level >= self.max_depth {
            return Err(MetaError::DepthExceeded {
                level: level + 1,
                max: self.max_depth,
            });
        }
        phi.validate(&self.shape_at(store, level)?)?;
        let slot = level;
        if let Some(pos) = self.levels[slot].iter().position(|p| p.definition == phi) {
            return Ok(&self.levels[slot][pos]);
        }
        let id = format!("L{}.{}", level + 1, self.levels[slot].len());
        let extension = self.filter_level(store, level, &phi);
        self.levels[slot].push(MetaPredicate {
            id,
            level: level + 1,
            definition: phi,
            extension,
        });
        // Objects at level + 1 changed, so every cache above is stale.
        self.refresh_from(store, level + 2);
        Ok(self.levels[slot].last().expect("just pushed"))
    }

    /// `z(x)`, computed by re-evaluating the definition of `z` on `x`.
    pub fn apply_meta(&self, store: &Store, z: &str, x: &str) -> Result<bool, MetaError> {
        let z = self
            .predicate(z)
            .ok_or_else(|| MetaError::NotAPredicate(z.to_string()))?;
        let expected = z.level - 1;
        let found = self
            .level_of(store, x)
            .ok_or_else(|| MetaError::UnknownObject(x.to_string()))?;
        if found != expected {
            return Err(MetaError::LevelMismatch {
                object: x.to_string(),
                expected,
                found,
            });
        }
        Ok(if expected == 0 {
            let ind = store.individual(x).expect("level checked");
            z.definition.evaluate(&ind.view(Version::Current).expect("current state"))
        } else {
            let obj = self.predicate(x).expect("level checked");
            z.definition.evaluate(&MetaView(obj))
        })
    }

    pub fn comprehend_at_level(
        &self,
        store: &Store,
        level: usize,
        phi: &Predicate,
    ) -> Result<BTreeSet<String>, MetaError> {
        phi.validate(&self.shape_at(store, level)?)?;
        Ok(self.filter_level(store, level, phi))
    }

    /// Recomputes every extension cache. Called inside each write commit
    /// that touches level-0 data; definitions are left untouched.
    pub fn refresh(&mut self, store: &Store) {
        self.refresh_from(store, 1);
    }

    fn refresh_from(&mut self, store: &Store, first_level: usize) {
        for level in first_level.max(1)..=self.max_depth {
            let slot = level - 1;
            let fresh: Vec<BTreeSet<String>> = self.levels[slot]
                .iter()
                .map(|p| self.filter_level(store, level - 1, &p.definition))
                .collect();
            for (p, ext) in self.levels[slot].iter_mut().zip(fresh) {
                p.extension = ext;
            }
        }
    }

    /// Hash of every predicate definition (ids, levels and formulas), not
    /// including extension caches.
    pub fn definitions_hash(&self) -> String {
        let defs: Vec<(&str, usize, &Predicate)> = self
            .levels
            .iter()
            .flatten()
            .map(|p| (p.id.as_str(), p.level, &p.definition))
            .collect();
        content_hash(&defs)
    }

    pub fn register_constraint(&mut self, store: &Store, subject: &str, predicate: &str) -> Result<(), MetaError> {
        let level = self
            .level_of(store, subject)
            .ok_or_else(|| MetaError::UnknownObject(subject.to_string()))?;
        let p = self
            .predicate(predicate)
            .ok_or_else(|| MetaError::NotAPredicate(predicate.to_string()))?;
        if p.level != level + 1 {
            return Err(MetaError::LevelMismatch {
                object: predicate.to_string(),
                expected: level + 1,
                found: p.level,
            });
        }
        let rec = self.records.entry(subject.to_string()).or_default();
        if !rec.constraints.iter().any(|c| c == predicate) {
            rec.constraints.push(predicate.to_string());
        }
        Ok(())
    }

    pub fn set_access_rights(&mut self, store: &Store, subject: &str, rank: Rank) -> Result<(), MetaError> {
        self.level_of(store, subject)
            .ok_or_else(|| MetaError::UnknownObject(subject.to_string()))?;
        self.records.entry(subject.to_string()).or_default().access_rights = Some(rank);
        Ok(())
    }

    pub fn tag(&mut self, store: &Store, subject: &str, key: &str, value: &str) -> Result<(), MetaError> {
        self.level_of(store, subject)
            .ok_or_else(|| MetaError::UnknownObject(subject.to_string()))?;
        self.records
            .entry(subject.to_string())
            .or_default()
            .extras
            .insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn describe(&self, store: &Store, subject: &str) -> Result<MetadataRecord, MetaError> {
        let level = self
            .level_of(store, subject)
            .ok_or_else(|| MetaError::UnknownObject(subject.to_string()))?;
        let dimensions = if level == 0 {
            let ind = store.individual(subject).expect("level 0");
            store
                .concept(ind.concept())
                .expect("individuals have concepts")
                .fields()
                .iter()
                .map(|(name, kind)| FieldDescriptor {
                    name: name.clone(),
                    kind: kind.clone(),
                })
                .collect()
        } else {
            meta_shape()
                .into_iter()
                .map(|(name, kind)| FieldDescriptor { name, kind })
                .collect()
        };
        let stored = self.records.get(subject).cloned().unwrap_or_default();
        Ok(MetadataRecord {
            subject: subject.to_string(),
            level,
            dimensions,
            integrity_constraints: stored.constraints,
            access_rights: stored.access_rights.unwrap_or(Rank::Administrator),
            extras: stored.extras,
        })
    }
}
