//! Simulated back-end repositories behind cartridge adapters, plus the
//! portal item catalog aggregated from them.
//!
//! Each repository keeps its native records and mirrors every item as an
//! individual of the kind's adapter concept in the warehouse [`Store`], so
//! a fetch always yields a versioned [`DataObject`] and item revisions are
//! ordinary state versions. The same store also holds schema-declared
//! concepts and individuals; the warehouse content hash covers only the
//! repositories.

mod adapter;
pub mod native;

pub use adapter::{CartridgeAdapter, CONTACT, EMPLOYEE, FINANCIAL_FIGURE, MEDIA_ASSET};
pub use native::*;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::content_hash;
use crate::model::{DataObject, Store, Version};
use crate::predicate::{Predicate, PredicateError};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WarehouseError {
    #[error("unknown repository `{0}`")]
    UnknownRepository(String),
    #[error("repository `{0}` already declared")]
    DuplicateRepository(String),
    #[error("a {0} repository is already declared")]
    DuplicateKind(RepoKind),
    #[error("unknown item `{item}` in repository `{repo}`")]
    UnknownItem { repo: String, item: String },
    #[error("sub-category is only valid for static images")]
    InvalidCategoryCombination,
    #[error("ill-typed predicate: {0}")]
    IllTypedPredicate(#[from] PredicateError),
    #[error("malformed change: {0}")]
    MalformedChange(String),
}

/// Portal item catalog: key and the repository kind it is drawn from.
pub const CATALOG: [(&str, RepoKind); 10] = [
    ("totalEstablishment", RepoKind::Hr),
    ("countryCount", RepoKind::Hr),
    ("companyCount", RepoKind::Hr),
    ("vacancies", RepoKind::Hr),
    ("revenues", RepoKind::Finance),
    ("profits", RepoKind::Finance),
    ("productionDynamics", RepoKind::Finance),
    ("stockValues", RepoKind::Finance),
    ("deferredCharges", RepoKind::Finance),
    ("contacts", RepoKind::Docs),
];

pub fn catalog_kind(key: &str) -> Option<RepoKind> {
    CATALOG.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

/// Source reference used for page dependency tracking.
pub fn repo_source(name: &str) -> String {
    format!("repo:{name}")
}

pub fn concept_source(name: &str) -> String {
    format!("concept:{name}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ItemValue {
    Integer(i64),
    Real(f64),
    Boolean(bool),
    List(Vec<String>),
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PortalItem {
    pub key: String,
    pub value: ItemValue,
    pub source: Option<String>,
    pub as_of: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repository {
    name: String,
    kind: RepoKind,
    items: BTreeMap<String, NativeRecord>,
    /// Mutation counter; every accepted change bumps it.
    version: u64,
    hash: String,
}

impl Repository {
    fn new(name: String, kind: RepoKind) -> Self {
        let mut repo = Repository {
            name,
            kind,
            items: BTreeMap::new(),
            version: 0,
            hash: String::new(),
        };
        repo.rehash();
        repo
    }

    fn rehash(&mut self) {
        self.hash = content_hash(&(&self.name, self.kind, &self.items, self.version));
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> RepoKind {
        self.kind
    }

    pub fn items(&self) -> &BTreeMap<String, NativeRecord> {
        &self.items
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn content_hash(&self) -> &str {
        &self.hash
    }
}

/// Change descriptor accepted by [`Warehouse::mutate`]. Values are plain
/// JSON scalars read against the adapter concept's field kinds; an update
/// overlays the given fields on the current record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Change {
    Insert {
        id: String,
        values: BTreeMap<String, serde_json::Value>,
    },
    Update {
        id: String,
        values: BTreeMap<String, serde_json::Value>,
    },
}

impl Change {
    pub fn id(&self) -> &str {
        match self {
            Change::Insert { id, .. } | Change::Update { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationReceipt {
    pub repo: String,
    pub item: String,
    pub revision: u64,
    /// Source references whose content changed.
    pub touched: BTreeSet<String>,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FetchedObject {
    pub object: DataObject,
    pub as_of: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaMatch {
    pub id: String,
    pub media: MediaObject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warehouse {
    repositories: BTreeMap<String, Repository>,
    adapters: BTreeMap<RepoKind, CartridgeAdapter>,
    store: Store,
}

impl Default for Warehouse {
    fn default() -> Self {
        Self::new()
    }
}

impl Warehouse {
    pub fn new() -> Self {
        let mut store = Store::new();
        let mut adapters = BTreeMap::new();
        for adapter in CartridgeAdapter::all() {
            store
                .define_concept(adapter.concept().clone())
                .expect("adapter concepts are distinct");
            adapters.insert(adapter.kind(), adapter);
        }
        Warehouse {
            repositories: BTreeMap::new(),
            adapters,
            store,
        }
    }

    pub fn adapter(&self, kind: RepoKind) -> &CartridgeAdapter {
        &self.adapters[&kind]
    }

    pub fn adapters(&self) -> impl Iterator<Item = &CartridgeAdapter> {
        self.adapters.values()
    }

    /// Adapter whose concept is `name`, if any.
    pub fn adapter_for_concept(&self, name: &str) -> Option<&CartridgeAdapter> {
        self.adapters.values().find(|a| a.concept().name() == name)
    }

    /// Store holding one individual per repository item, alongside any
    /// schema-declared individuals.
    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Mutable store access for schema declarations. Adapter individuals
    /// must only change through [`Warehouse::mutate`].
    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn add_repository(&mut self, name: impl Into<String>, kind: RepoKind) -> Result<(), WarehouseError> {
        let name = name.into();
        if self.repositories.contains_key(&name) {
            return Err(WarehouseError::DuplicateRepository(name));
        }
        if self.repository_of_kind(kind).is_some() {
            return Err(WarehouseError::DuplicateKind(kind));
        }
        self.repositories.insert(name.clone(), Repository::new(name, kind));
        Ok(())
    }

    pub fn repository(&self, name: &str) -> Result<&Repository, WarehouseError> {
        self.repositories
            .get(name)
            .ok_or_else(|| WarehouseError::UnknownRepository(name.to_string()))
    }

    pub fn repositories(&self) -> impl Iterator<Item = &Repository> {
        self.repositories.values()
    }

    pub fn repository_of_kind(&self, kind: RepoKind) -> Option<&Repository> {
        self.repositories.values().find(|r| r.kind == kind)
    }

    pub fn content_hash(&self) -> String {
        content_hash(&self.repositories)
    }

    pub fn uniform_fetch(&self, repo: &str, item: &str) -> Result<FetchedObject, WarehouseError> {
        let r = self.repository(repo)?;
        if !r.items.contains_key(item) {
            return Err(WarehouseError::UnknownItem {
                repo: repo.to_string(),
                item: item.to_string(),
            });
        }
        let object = self
            .store
            .individual(item)
            .and_then(|ind| ind.data_object(Version::Current))
            .expect("every item is mirrored");
        Ok(FetchedObject {
            object,
            as_of: r.version,
        })
    }

    /// Media items of `category` (narrowed by `sub` for static images)
    /// that satisfy `phi`, ordered by id.
    pub fn search_media(
        &self,
        category: MediaCategory,
        sub: Option<ImageKind>,
        phi: &Predicate,
    ) -> Result<Vec<MediaMatch>, WarehouseError> {
        if sub.is_some() && category != MediaCategory::StaticImage {
            return Err(WarehouseError::InvalidCategoryCombination);
        }
        phi.validate(&self.adapter(RepoKind::Media).concept().shape())?;
        let Some(repo) = self.repository_of_kind(RepoKind::Media) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (id, record) in &repo.items {
            let NativeRecord::Media(m) = record else { continue };
            if m.category != category || (sub.is_some() && m.sub_category != sub) {
                continue;
            }
            let view = self
                .store
                .individual(id)
                .and_then(|ind| ind.data_object(Version::Current))
                .expect("every item is mirrored");
            if phi.evaluate(&view) {
                out.push(MediaMatch {
                    id: id.clone(),
                    media: m.clone(),
                });
            }
        }
        Ok(out)
    }

    pub fn aggregate_portal_items(&self) -> Vec<PortalItem> {
        CATALOG
            .iter()
            .map(|(key, _)| self.portal_item(key).expect("catalog key"))
            .collect()
    }

    /// The catalog item `key`, or `None` for keys outside the catalog.
    pub fn portal_item(&self, key: &str) -> Option<PortalItem> {
        let kind = catalog_kind(key)?;
        let Some(repo) = self.repository_of_kind(kind) else {
            return Some(PortalItem {
                key: key.to_string(),
                value: ItemValue::Unavailable,
                source: None,
                as_of: 0,
            });
        };
        let value = match kind {
            RepoKind::Hr => {
                let staff: Vec<&StaffRecord> = repo
                    .items
                    .values()
                    .filter_map(|r| match r {
                        NativeRecord::Hr(s) => Some(s),
                        _ => None,
                    })
                    .collect();
                let employed = || staff.iter().filter(|s| !s.open_vacancy);
                let n = match key {
                    "totalEstablishment" => employed().count(),
                    "countryCount" => employed().map(|s| &s.country).collect::<BTreeSet<_>>().len(),
                    "companyCount" => employed().map(|s| &s.company).collect::<BTreeSet<_>>().len(),
                    _ => staff.iter().filter(|s| s.open_vacancy).count(),
                };
                ItemValue::Integer(n as i64)
            }
            RepoKind::Finance => match repo.items.get(key) {
                Some(NativeRecord::Finance(entry)) => ItemValue::Real(entry.amount),
                _ => ItemValue::Unavailable,
            },
            RepoKind::Docs => {
                let mut list: Vec<String> = repo
                    .items
                    .values()
                    .filter_map(|r| match r {
                        NativeRecord::Docs(c) => Some(format!("{} <{}>", c.name, c.email)),
                        _ => None,
                    })
                    .collect();
                list.sort();
                ItemValue::List(list)
            }
            RepoKind::Media => ItemValue::Unavailable,
        };
        Some(PortalItem {
            key: key.to_string(),
            value,
            source: Some(repo.name.clone()),
            as_of: repo.version,
        })
    }

    fn read_values(
        adapter: &CartridgeAdapter,
        values: &BTreeMap<String, serde_json::Value>,
    ) -> Result<BTreeMap<String, Value>, WarehouseError> {
        let concept = adapter.concept();
        values
            .iter()
            .map(|(field, json)| {
                let kind = concept.kind_of(field).ok_or_else(|| {
                    WarehouseError::MalformedChange(format!("unknown field `{field}` for {}", concept.name()))
                })?;
                let v = Value::from_json(kind, json).ok_or_else(|| {
                    WarehouseError::MalformedChange(format!("field `{field}` expects {kind}, got {json}"))
                })?;
                Ok((field.clone(), v))
            })
            .collect()
    }

    /// Applies `change` to `repo` atomically: on error nothing changes.
    pub fn mutate(&mut self, repo: &str, change: &Change) -> Result<MutationReceipt, WarehouseError> {
        let r = self.repository(repo)?;
        let adapter = self.adapter(r.kind).clone();
        let (record, cause) = match change {
            Change::Insert { id, values } => {
                if id.is_empty() {
                    return Err(WarehouseError::MalformedChange("empty item id".into()));
                }
                if self.store.individual(id).is_some() {
                    return Err(WarehouseError::MalformedChange(format!("item id `{id}` already in use")));
                }
                if r.kind == RepoKind::Finance && catalog_kind(id) != Some(RepoKind::Finance) {
                    return Err(WarehouseError::MalformedChange(format!(
                        "finance items are keyed by catalog key, got `{id}`"
                    )));
                }
                (adapter.decode(Self::read_values(&adapter, values)?)?, "insert")
            }
            Change::Update { id, values } => {
                let current = r.items.get(id).ok_or_else(|| {
                    WarehouseError::MalformedChange(format!("no item `{id}` in repository `{repo}`"))
                })?;
                let mut merged = adapter.encode(current);
                merged.extend(Self::read_values(&adapter, values)?);
                (adapter.decode(merged)?, "update")
            }
        };
        let id = change.id();
        let encoded = adapter.encode(&record);
        let revision = match change {
            Change::Insert { .. } => self.store.create(id, adapter.concept().name(), encoded, Some(cause)),
            Change::Update { .. } => self.store.transition(id, encoded, cause),
        }
        .map_err(|e| WarehouseError::MalformedChange(e.to_string()))?
        .current()
        .version;

        let r = self.repositories.get_mut(repo).expect("checked above");
        r.items.insert(id.to_string(), record);
        r.version += 1;
        r.rehash();
        Ok(MutationReceipt {
            repo: repo.to_string(),
            item: id.to_string(),
            revision,
            touched: [repo_source(repo), concept_source(adapter.concept().name())].into(),
            hash: r.hash.clone(),
        })
    }
}
