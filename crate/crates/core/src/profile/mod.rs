//! Curried profile functionals and session-scoped access profiles.
//!
//! A metric denotation is a family of generalized values indexed by
//! assignment chains. Applying a metric to a chain such as
//! `[s = higraph, p = registered]` is left-to-right application of the
//! evaluation function: each assignment point may narrow the generalized
//! value, until the saturation level is reached and further assignments
//! no longer change it.

mod session;

pub use session::{Session, SessionError, SessionRegistry, SessionState};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position in the user hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Ordinary,
    Manager,
    Administrator,
}

impl Rank {
    pub const ALL: [Rank; 3] = [Rank::Ordinary, Rank::Manager, Rank::Administrator];

    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Ordinary => "ordinary",
            Rank::Manager => "manager",
            Rank::Administrator => "administrator",
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rank {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rank::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ProfileError::UnknownRank(s.to_string()))
    }
}

/// Assignment dimensions: user settings, registration status, browser and
/// access device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "s")]
    Settings,
    #[serde(rename = "p")]
    Status,
    #[serde(rename = "v")]
    Browser,
    #[serde(rename = "e")]
    Device,
}

impl Dim {
    pub const ALL: [Dim; 4] = [Dim::Settings, Dim::Status, Dim::Browser, Dim::Device];

    pub fn symbol(self) -> &'static str {
        match self {
            Dim::Settings => "s",
            Dim::Status => "p",
            Dim::Browser => "v",
            Dim::Device => "e",
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Dim {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dim::ALL
            .into_iter()
            .find(|d| d.symbol() == s)
            .ok_or_else(|| ProfileError::UnknownDimension(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("unknown rank `{0}`")]
    UnknownRank(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("dimension `{0}` has no declared alphabet")]
    UndeclaredDimension(Dim),
    #[error("dimension `{0}` needs a non-empty alphabet")]
    EmptyAlphabet(Dim),
    #[error("`{value}` is not in the alphabet of dimension `{dim}`")]
    UnknownDimensionValue { dim: Dim, value: String },
    #[error("chain {chain} does not follow the order ({order})")]
    OutOfOrderChain { chain: String, order: String },
    #[error("metric `{metric}`: incomplete table at chain {chain}")]
    IncompleteTable { metric: String, chain: String },
    #[error("metric `{metric}`: chain {chain} maps to an empty value set")]
    EmptyValueSet { metric: String, chain: String },
    #[error("metric `{metric}`: duplicate dimension `{dim}` in order")]
    DuplicateOrder { metric: String, dim: Dim },
    #[error("metric `{metric}` declares saturation {declared} but saturates at {actual}")]
    SaturationMismatch {
        metric: String,
        declared: usize,
        actual: usize,
    },
    #[error("profile `{profile}` has no value for dimension `{dim}`")]
    MissingDimension { profile: String, dim: Dim },
    #[error("page `{page}` is visible to {lower} but not to {higher} for {assignment}")]
    HierarchyViolation {
        page: String,
        lower: Rank,
        higher: Rank,
        assignment: String,
    },
    #[error("session is closed")]
    SessionClosed,
}

/// Alphabets of the declared assignment dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    alphabets: BTreeMap<Dim, BTreeSet<String>>,
}

impl Default for Dimensions {
    /// `s` and `p` carry their standard alphabets; `v` and `e` must be
    /// declared by the schema.
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        Dimensions {
            alphabets: [
                (Dim::Settings, set(&["higraph", "mmedia"])),
                (Dim::Status, set(&["registered", "unregistered", "corporate"])),
            ]
            .into_iter()
            .collect(),
        }
    }
}

impl Dimensions {
    pub fn declare(&mut self, dim: Dim, alphabet: BTreeSet<String>) -> Result<(), ProfileError> {
        if alphabet.is_empty() {
            return Err(ProfileError::EmptyAlphabet(dim));
        }
        self.alphabets.insert(dim, alphabet);
        Ok(())
    }

    pub fn alphabet(&self, dim: Dim) -> Option<&BTreeSet<String>> {
        self.alphabets.get(&dim)
    }

    pub fn declared(&self) -> impl Iterator<Item = Dim> + '_ {
        self.alphabets.keys().copied()
    }

    pub fn check_value(&self, dim: Dim, value: &str) -> Result<(), ProfileError> {
        let alphabet = self.alphabet(dim).ok_or(ProfileError::UndeclaredDimension(dim))?;
        if alphabet.contains(value) {
            Ok(())
        } else {
            Err(ProfileError::UnknownDimensionValue {
                dim,
                value: value.to_string(),
            })
        }
    }

    /// Every total assignment over the declared dimensions.
    pub fn assignments(&self) -> Vec<BTreeMap<Dim, String>> {
        let mut out = vec![BTreeMap::new()];
        for (dim, alphabet) in &self.alphabets {
            out = out
                .into_iter()
                .flat_map(|partial| {
                    alphabet.iter().map(move |v| {
                        let mut next = partial.clone();
                        next.insert(*dim, v.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }
}

/// An assignment chain: dimension/value pairs applied left to right.
pub type Chain = Vec<(Dim, String)>;

pub fn format_chain(chain: &[(Dim, String)]) -> String {
    let parts: Vec<String> = chain.iter().map(|(d, v)| format!("{d} = {v}")).collect();
    format!("[{}]", parts.join(", "))
}

fn format_values(order: &[Dim], values: &[String]) -> String {
    let chain: Chain = order.iter().copied().zip(values.iter().cloned()).collect();
    format_chain(&chain)
}

/// JSON maps need string keys, so the table travels as `[chain, values]` pairs.
mod table_as_pairs {
    use std::collections::{BTreeMap, BTreeSet};

    use serde::{Deserialize, Deserializer, Serializer};

    type Table = BTreeMap<Vec<String>, BTreeSet<String>>;

    pub fn serialize<S: Serializer>(table: &Table, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(table.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Table, D::Error> {
        Ok(Vec::<(Vec<String>, BTreeSet<String>)>::deserialize(d)?.into_iter().collect())
    }
}

/// A curried metric: generalized value sets indexed by chain prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricDenotation {
    name: String,
    order: Vec<Dim>,
    /// Keyed by the values of a chain prefix, in `order`.
    #[serde(with = "table_as_pairs")]
    table: BTreeMap<Vec<String>, BTreeSet<String>>,
    declared_saturation: Option<usize>,
}

impl MetricDenotation {
    /// Builds and validates a metric. The table must contain the empty
    /// chain and be closed under prefixes; every stored chain must follow
    /// `order` with values from the declared alphabets.
    pub fn new(
        name: impl Into<String>,
        order: Vec<Dim>,
        rows: impl IntoIterator<Item = (Chain, BTreeSet<String>)>,
        declared_saturation: Option<usize>,
        dims: &Dimensions,
    ) -> Result<Self, ProfileError> {
        let name = name.into();
        for (i, d) in order.iter().enumerate() {
            if order[..i].contains(d) {
                return Err(ProfileError::DuplicateOrder {
                    metric: name,
                    dim: *d,
                });
            }
            dims.alphabet(*d).ok_or(ProfileError::UndeclaredDimension(*d))?;
        }
        let mut metric = MetricDenotation {
            name,
            order,
            table: BTreeMap::new(),
            declared_saturation,
        };
        for (chain, values) in rows {
            let key = metric.chain_key(&chain, dims)?;
            if values.is_empty() {
                return Err(ProfileError::EmptyValueSet {
                    metric: metric.name.clone(),
                    chain: format_chain(&chain),
                });
            }
            metric.table.insert(key, values);
        }
        for key in metric.table.keys() {
            for k in 0..key.len() {
                if !metric.table.contains_key(&key[..k]) {
                    return Err(ProfileError::IncompleteTable {
                        metric: metric.name.clone(),
                        chain: format_values(&metric.order, &key[..k]),
                    });
                }
            }
        }
        if !metric.table.contains_key(&Vec::<String>::new()) {
            return Err(ProfileError::IncompleteTable {
                metric: metric.name.clone(),
                chain: "[]".into(),
            });
        }
        if let Some(declared) = declared_saturation {
            let actual = metric.saturation_level(dims)?;
            if actual != declared {
                return Err(ProfileError::SaturationMismatch {
                    metric: metric.name.clone(),
                    declared,
                    actual,
                });
            }
        }
        Ok(metric)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> &[Dim] {
        &self.order
    }

    pub fn declared_saturation(&self) -> Option<usize> {
        self.declared_saturation
    }

    /// Stored rows as (chain, value set), in canonical order.
    pub fn rows(&self) -> impl Iterator<Item = (Chain, &BTreeSet<String>)> {
        self.table.iter().map(|(k, v)| {
            (
                self.order.iter().copied().zip(k.iter().cloned()).collect(),
                v,
            )
        })
    }

    fn chain_key(&self, chain: &[(Dim, String)], dims: &Dimensions) -> Result<Vec<String>, ProfileError> {
        let in_order = chain.len() <= self.order.len()
            && chain.iter().zip(&self.order).all(|((d, _), o)| d == o);
        if !in_order {
            return Err(ProfileError::OutOfOrderChain {
                chain: format_chain(chain),
                order: self
                    .order
                    .iter()
                    .map(|d| d.symbol())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
        chain
            .iter()
            .map(|(d, v)| dims.check_value(*d, v).map(|_| v.clone()))
            .collect()
    }

    /// `‖m‖(‖a1‖)…(‖ak‖)`: the value stored at the longest stored prefix
    /// of the chain.
    pub fn apply_assignment(&self, chain: &[(Dim, String)], dims: &Dimensions) -> Result<&BTreeSet<String>, ProfileError> {
        let key = self.chain_key(chain, dims)?;
        Ok(self.lookup(&key))
    }

    fn lookup(&self, key: &[String]) -> &BTreeSet<String> {
        (0..=key.len())
            .rev()
            .find_map(|k| self.table.get(&key[..k]))
            .expect("the empty chain is always stored")
    }

    /// Least `k` such that every chain of length at least `k` evaluates to
    /// the same value as its length-`k` prefix.
    ///
    /// Requires the stored chains to form a complete tree: each stored
    /// chain shorter than the order has either all of its one-step
    /// extensions stored or none of them (a leaf, whose value then holds
    /// for every extension).
    pub fn saturation_level(&self, dims: &Dimensions) -> Result<usize, ProfileError> {
        let mut level = 0;
        for key in self.table.keys() {
            if key.len() < self.order.len() {
                let dim = self.order[key.len()];
                let alphabet = dims.alphabet(dim).ok_or(ProfileError::UndeclaredDimension(dim))?;
                let mut child = key.clone();
                child.push(String::new());
                let mut present = 0;
                let mut missing = None;
                for v in alphabet {
                    *child.last_mut().expect("pushed") = v.clone();
                    if self.table.contains_key(&child) {
                        present += 1;
                    } else if missing.is_none() {
                        missing = Some(child.clone());
                    }
                }
                if present > 0 {
                    if let Some(m) = missing {
                        return Err(ProfileError::IncompleteTable {
                            metric: self.name.clone(),
                            chain: format_values(&self.order, &m),
                        });
                    }
                }
            }
            // A node that differs from its parent pins saturation at its depth.
            if let Some((_, parent)) = key.split_last() {
                if self.table[key] != self.table[parent] {
                    level = level.max(key.len());
                }
            }
        }
        Ok(level)
    }
}

/// A persona: hierarchy rank plus one value per declared dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub rank: Rank,
    pub dims: BTreeMap<Dim, String>,
}

impl UserProfile {
    pub fn validate(&self, dims: &Dimensions) -> Result<(), ProfileError> {
        for d in dims.declared() {
            if !self.dims.contains_key(&d) {
                return Err(ProfileError::MissingDimension {
                    profile: self.user_id.clone(),
                    dim: d,
                });
            }
        }
        for (d, v) in &self.dims {
            dims.check_value(*d, v)?;
        }
        Ok(())
    }
}

/// Who may see a page and which sources it reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageAccess {
    pub page: String,
    pub required: Rank,
    pub conditions: BTreeMap<Dim, String>,
    pub reads: BTreeSet<String>,
}

impl PageAccess {
    pub fn admits(&self, rank: Rank, dims: &BTreeMap<Dim, String>) -> bool {
        rank >= self.required
            && self
                .conditions
                .iter()
                .all(|(d, v)| dims.get(d).is_some_and(|x| x == v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expiry {
    /// Valid until the owning session closes.
    SessionClose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessProfile {
    pub session_token: String,
    pub rank: Rank,
    pub visible_pages: BTreeSet<String>,
    /// Sources (repositories, concepts, the frame network) the visible
    /// pages read.
    pub visible_objects: BTreeSet<String>,
    pub metadata_access: bool,
    pub expiry: Expiry,
}

impl AccessProfile {
    pub fn permits_page(&self, page: &str) -> bool {
        self.visible_pages.contains(page)
    }
}

pub fn derive_access_profile(
    profile: &UserProfile,
    session: &Session,
    pages: &[PageAccess],
) -> Result<AccessProfile, ProfileError> {
    if session.state != SessionState::Open {
        return Err(ProfileError::SessionClosed);
    }
    let visible: Vec<&PageAccess> = pages
        .iter()
        .filter(|p| p.admits(profile.rank, &profile.dims))
        .collect();
    Ok(AccessProfile {
        session_token: session.token.clone(),
        rank: profile.rank,
        visible_pages: visible.iter().map(|p| p.page.clone()).collect(),
        visible_objects: visible.iter().flat_map(|p| p.reads.iter().cloned()).collect(),
        metadata_access: profile.rank == Rank::Administrator,
        expiry: Expiry::SessionClose,
    })
}

/// Checks `visible(ordinary) ⊆ visible(manager) ⊆ visible(administrator)`
/// for every total assignment over the declared dimensions.
pub fn check_hierarchy(pages: &[PageAccess], dims: &Dimensions) -> Result<(), ProfileError> {
    for assignment in dims.assignments() {
        for pair in Rank::ALL.windows(2) {
            let (lower, higher) = (pair[0], pair[1]);
            if let Some(p) = pages
                .iter()
                .find(|p| p.admits(lower, &assignment) && !p.admits(higher, &assignment))
            {
                let parts: Vec<String> = assignment.iter().map(|(d, v)| format!("{d} = {v}")).collect();
                return Err(ProfileError::HierarchyViolation {
                    page: p.page.clone(),
                    lower,
                    higher,
                    assignment: parts.join(", "),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
