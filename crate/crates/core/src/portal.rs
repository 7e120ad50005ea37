//! Page definitions and the computation of their item values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frames::{FrameLanguage, FramePattern, Term};
use crate::model::Version;
use crate::predicate::Predicate;
use crate::warehouse::{catalog_kind, concept_source, repo_source, ItemValue, Warehouse};

/// Source reference of the frame network.
pub const FRAMES_SOURCE: &str = "frames";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemExpr {
    /// Portal catalog key.
    Key { key: String },
    /// Frame query; one list entry per binding.
    Query { pattern: FramePattern },
    /// Size of `{x : concept | predicate}` over the concept's extent.
    Count { concept: String, predicate: Predicate },
}

impl ItemExpr {
    pub fn label(&self) -> String {
        match self {
            ItemExpr::Key { key } => key.clone(),
            other => other.to_string(),
        }
    }

    /// Source reference this item reads, given the declared repositories.
    pub fn source(&self, warehouse: &Warehouse) -> Option<String> {
        match self {
            ItemExpr::Key { key } => catalog_kind(key)
                .and_then(|k| warehouse.repository_of_kind(k))
                .map(|r| repo_source(r.name())),
            ItemExpr::Query { .. } => Some(FRAMES_SOURCE.to_string()),
            ItemExpr::Count { concept, .. } => Some(concept_source(concept)),
        }
    }
}

impl fmt::Display for ItemExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemExpr::Key { key } => f.write_str(key),
            ItemExpr::Query { pattern } => write!(f, "query {pattern}"),
            ItemExpr::Count { concept, predicate } => write!(f, "count? {{{concept} | {predicate}}}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDef {
    pub id: String,
    pub required: crate::profile::Rank,
    pub conditions: BTreeMap<crate::profile::Dim, String>,
    pub items: Vec<ItemExpr>,
}

impl PageDef {
    pub fn access(&self, warehouse: &Warehouse) -> crate::profile::PageAccess {
        crate::profile::PageAccess {
            page: self.id.clone(),
            required: self.required,
            conditions: self.conditions.clone(),
            reads: self.reads(warehouse),
        }
    }

    pub fn reads(&self, warehouse: &Warehouse) -> BTreeSet<String> {
        self.items.iter().filter_map(|i| i.source(warehouse)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderedItem {
    pub label: String,
    pub value: ItemValue,
    pub source: Option<String>,
    pub as_of: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderedPage {
    pub page: String,
    pub items: Vec<RenderedItem>,
    pub overlay: BTreeMap<String, serde_json::Value>,
    pub stale: bool,
}

fn binding_text(pattern: &FramePattern, binding: &BTreeMap<String, String>) -> String {
    let vars: Vec<&String> = [&pattern.subject, &pattern.object]
        .into_iter()
        .filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
        .collect();
    if vars.len() == 1 || (vars.len() == 2 && vars[0] == vars[1]) {
        return binding[vars[0]].clone();
    }
    binding
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Evaluates one item against current state. `versions` gives the
/// mutation counter of each source reference.
pub fn compute_item(
    item: &ItemExpr,
    warehouse: &Warehouse,
    frames: &FrameLanguage,
    versions: &BTreeMap<String, u64>,
) -> RenderedItem {
    let source = item.source(warehouse);
    let value = match item {
        ItemExpr::Key { key } => warehouse
            .portal_item(key)
            .map(|p| p.value)
            .unwrap_or(ItemValue::Unavailable),
        ItemExpr::Query { pattern } => match frames.query_frames(pattern) {
            Ok(bindings) if pattern.is_ground() => ItemValue::Boolean(!bindings.is_empty()),
            Ok(bindings) => {
                let mut list: Vec<String> = bindings.iter().map(|b| binding_text(pattern, b)).collect();
                list.sort();
                ItemValue::List(list)
            }
            Err(_) => ItemValue::Unavailable,
        },
        ItemExpr::Count { concept, predicate } => {
            let store = warehouse.store();
            match store.comprehend(concept, &store.extent(concept), predicate, Version::Current) {
                Ok(hits) => ItemValue::Integer(hits.len() as i64),
                Err(_) => ItemValue::Unavailable,
            }
        }
    };
    let as_of = source.as_ref().and_then(|s| versions.get(s)).copied().unwrap_or(0);
    RenderedItem {
        label: item.label(),
        value,
        source,
        as_of,
    }
}

pub fn compute_page(
    page: &PageDef,
    warehouse: &Warehouse,
    frames: &FrameLanguage,
    versions: &BTreeMap<String, u64>,
) -> Vec<RenderedItem> {
    page.items
        .iter()
        .map(|i| compute_item(i, warehouse, frames, versions))
        .collect()
}
