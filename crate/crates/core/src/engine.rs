//! All loaded state behind one single-writer commit point.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::events::{Action, Effect, Event, EventEngine, EventError, ScriptDef, UpdatePolicy};
use crate::frames::{FrameError, FrameLanguage};
use crate::hash::content_hash;
use crate::meta::{MetaError, MetaTower, MetadataRecord};
use crate::model::{ModelError, Store};
use crate::portal::{compute_page, PageDef, RenderedItem, RenderedPage, FRAMES_SOURCE};
use crate::predicate::Predicate;
use crate::profile::{
    derive_access_profile, AccessProfile, Chain, Dim, Dimensions, MetricDenotation, PageAccess, ProfileError, Session,
    UserProfile,
};
use crate::value::Value;
use crate::warehouse::{concept_source, repo_source, Change, MutationReceipt, Warehouse, WarehouseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    /// Unknown page, or a page the session may not see.
    #[error("no such page `{0}`")]
    NotFound(String),
    #[error("metadata access requires administrator rank")]
    Forbidden,
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Warehouse(#[from] WarehouseError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkOutcome {
    pub marked: Vec<String>,
    pub refreshed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateOutcome {
    pub receipt: MutationReceipt,
    pub marks: MarkOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    pub(crate) dims: Dimensions,
    pub(crate) warehouse: Warehouse,
    pub(crate) tower: MetaTower,
    pub(crate) frames: FrameLanguage,
    pub(crate) profiles: BTreeMap<String, UserProfile>,
    pub(crate) metrics: BTreeMap<String, MetricDenotation>,
    pub(crate) pages: Vec<PageDef>,
    pub(crate) events: EventEngine,
    /// Dimensions given an alphabet by a loaded schema.
    pub(crate) declared_dims: BTreeSet<Dim>,
    /// Per source reference, the number of changes it has seen.
    source_versions: BTreeMap<String, u64>,
    /// Materialized page items as of each page's last refresh.
    cache: BTreeMap<String, Vec<RenderedItem>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            dims: Dimensions::default(),
            warehouse: Warehouse::new(),
            tower: MetaTower::default(),
            frames: FrameLanguage::new(),
            profiles: BTreeMap::new(),
            metrics: BTreeMap::new(),
            pages: Vec::new(),
            events: EventEngine::default(),
            declared_dims: BTreeSet::new(),
            source_versions: BTreeMap::new(),
            cache: BTreeMap::new(),
        }
    }
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn warehouse(&self) -> &Warehouse {
        &self.warehouse
    }

    pub fn store(&self) -> &Store {
        self.warehouse.store()
    }

    pub fn tower(&self) -> &MetaTower {
        &self.tower
    }

    /// Lifts `phi` from `level`; the tower is engine state, so this is a
    /// write like any other.
    pub fn lift(&mut self, level: usize, phi: Predicate) -> Result<String, MetaError> {
        Ok(self.tower.lift(self.warehouse.store(), level, phi)?.id.clone())
    }

    pub fn frames(&self) -> &FrameLanguage {
        &self.frames
    }

    pub fn profiles(&self) -> &BTreeMap<String, UserProfile> {
        &self.profiles
    }

    pub fn profile(&self, name: &str) -> Result<&UserProfile, EngineError> {
        self.profiles
            .get(name)
            .ok_or_else(|| EngineError::UnknownProfile(name.to_string()))
    }

    pub fn metrics(&self) -> &BTreeMap<String, MetricDenotation> {
        &self.metrics
    }

    pub fn metric(&self, name: &str) -> Result<&MetricDenotation, EngineError> {
        self.metrics
            .get(name)
            .ok_or_else(|| EngineError::UnknownMetric(name.to_string()))
    }

    pub fn apply_metric(&self, name: &str, chain: &Chain) -> Result<&BTreeSet<String>, EngineError> {
        Ok(self.metric(name)?.apply_assignment(chain, &self.dims)?)
    }

    pub fn pages(&self) -> &[PageDef] {
        &self.pages
    }

    pub fn page(&self, id: &str) -> Option<&PageDef> {
        self.pages.iter().find(|p| p.id == id)
    }

    pub fn scripts(&self) -> &[ScriptDef] {
        self.events.scripts()
    }

    pub fn policy(&self) -> UpdatePolicy {
        self.events.policy()
    }

    pub fn set_policy(&mut self, policy: UpdatePolicy) {
        self.events.set_policy(policy);
    }

    pub fn pending(&self) -> &BTreeSet<String> {
        self.events.pending()
    }

    pub fn tick(&self) -> u64 {
        self.events.tick()
    }

    pub fn page_accesses(&self) -> Vec<PageAccess> {
        self.pages.iter().map(|p| p.access(&self.warehouse)).collect()
    }

    /// Content hash of each independently stored part of the engine.
    pub fn hashes(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("store", self.store().content_hash()),
            ("warehouse", self.warehouse.content_hash()),
            ("frames", content_hash(&self.frames)),
            ("meta", content_hash(&self.tower)),
            ("profiles", content_hash(&(&self.dims, &self.profiles, &self.metrics))),
            ("portal", content_hash(&(&self.pages, self.events.scripts()))),
        ])
    }

    pub fn warehouse_hash(&self) -> String {
        self.warehouse.content_hash()
    }

    /// Every source reference pages may depend on.
    pub fn known_sources(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.warehouse.repositories().map(|r| repo_source(r.name())).collect();
        out.extend(self.store().concepts().map(|c| concept_source(c.name())));
        out.insert(FRAMES_SOURCE.to_string());
        out
    }

    pub fn source_versions(&self) -> &BTreeMap<String, u64> {
        &self.source_versions
    }

    fn touch(&mut self, sources: &BTreeSet<String>) {
        for s in sources {
            *self.source_versions.entry(s.clone()).or_default() += 1;
        }
    }

    /// Recomputes every derived cache and clears all marks. Run at the end
    /// of each successful load.
    pub(crate) fn rebuild(&mut self) {
        self.tower.refresh(self.warehouse.store());
        let ids: Vec<String> = self.pages.iter().map(|p| p.id.clone()).collect();
        for id in ids {
            self.refresh_page(&id);
        }
    }

    fn refresh_page(&mut self, id: &str) {
        let page = self.page(id).expect("refresh of a declared page");
        let items = compute_page(page, &self.warehouse, &self.frames, &self.source_versions);
        self.cache.insert(id.to_string(), items);
        self.events.clear_mark(id);
    }

    fn refresh_pending(&mut self) -> Vec<String> {
        let pending: Vec<String> = self.events.pending().iter().cloned().collect();
        for id in &pending {
            self.refresh_page(id);
        }
        pending
    }

    pub fn list_pages(&self, profile: &UserProfile) -> Vec<String> {
        self.pages
            .iter()
            .filter(|p| p.access(&self.warehouse).admits(profile.rank, &profile.dims))
            .map(|p| p.id.clone())
            .collect()
    }

    pub fn access_profile(&self, session: &Session) -> Result<AccessProfile, EngineError> {
        Ok(derive_access_profile(&session.profile, session, &self.page_accesses())?)
    }

    fn visible_page(&self, profile: &UserProfile, page: &str) -> Result<&PageDef, EngineError> {
        self.page(page)
            .filter(|p| p.access(&self.warehouse).admits(profile.rank, &profile.dims))
            .ok_or_else(|| EngineError::NotFound(page.to_string()))
    }

    fn assemble(&self, token: &str, page: &str, items: Vec<RenderedItem>) -> RenderedPage {
        RenderedPage {
            page: page.to_string(),
            items,
            overlay: self
                .events
                .overlay(token, page)
                .into_iter()
                .map(|(k, v)| (k, v.to_json()))
                .collect(),
            stale: self.events.pending().contains(page),
        }
    }

    /// The page as served: materialized items plus the session overlay.
    pub fn render(&self, token: &str, profile: &UserProfile, page: &str) -> Result<RenderedPage, EngineError> {
        let def = self.visible_page(profile, page)?;
        let items = self.cache.get(&def.id).cloned().unwrap_or_default();
        Ok(self.assemble(token, page, items))
    }

    /// The page recomputed from current state, ignoring the cache.
    pub fn scratch_render(&self, token: &str, profile: &UserProfile, page: &str) -> Result<RenderedPage, EngineError> {
        let def = self.visible_page(profile, page)?;
        let items = compute_page(def, &self.warehouse, &self.frames, &self.source_versions);
        Ok(self.assemble(token, page, items))
    }

    pub fn metadata(&self, profile: &UserProfile, object: &str) -> Result<MetadataRecord, EngineError> {
        if profile.rank != crate::profile::Rank::Administrator {
            return Err(EngineError::Forbidden);
        }
        Ok(self.tower.describe(self.warehouse.store(), object)?)
    }

    pub fn eval_at_level(&self, level: usize, phi: &Predicate) -> Result<BTreeSet<String>, MetaError> {
        self.tower.comprehend_at_level(self.warehouse.store(), level, phi)
    }

    /// Marks every page reading one of `sources`; under the event-driven
    /// policy the marked pages are refreshed before returning.
    pub fn mark_content_critical(&mut self, sources: &BTreeSet<String>) -> Result<MarkOutcome, EventError> {
        let known = self.known_sources();
        if let Some(unknown) = sources.iter().find(|s| !known.contains(*s)) {
            return Err(EventError::UnknownSource(unknown.clone()));
        }
        let mut marked = Vec::new();
        for page in &self.pages {
            if !page.reads(&self.warehouse).is_disjoint(sources) {
                marked.push(page.id.clone());
            }
        }
        for id in &marked {
            self.events.mark(id);
        }
        let refreshed = if self.events.policy() == UpdatePolicy::EventDriven {
            self.refresh_pending()
        } else {
            Vec::new()
        };
        Ok(MarkOutcome { marked, refreshed })
    }

    pub fn mutate(&mut self, repo: &str, change: &Change, content_critical: bool) -> Result<UpdateOutcome, EngineError> {
        let receipt = self.warehouse.mutate(repo, change)?;
        self.tower.refresh(self.warehouse.store());
        self.touch(&receipt.touched);
        let marks = if content_critical {
            self.mark_content_critical(&receipt.touched)?
        } else {
            MarkOutcome {
                marked: Vec::new(),
                refreshed: Vec::new(),
            }
        };
        Ok(UpdateOutcome { receipt, marks })
    }

    pub fn run_agent(&mut self, tick: u64) -> Vec<String> {
        self.events.set_tick(tick);
        if self.events.policy().refreshes_at(tick) {
            self.refresh_pending()
        } else {
            Vec::new()
        }
    }

    pub fn manual_refresh(&mut self, page: &str) -> Result<Vec<RenderedItem>, EventError> {
        if self.page(page).is_none() {
            return Err(EventError::UnknownPage(page.to_string()));
        }
        self.refresh_page(page);
        Ok(self.cache[page].clone())
    }

    pub fn close_session(&mut self, token: &str) {
        self.events.drop_session(token);
    }

    fn scenario_gate(&self, script: &ScriptDef) -> Option<Effect> {
        script
            .scenario
            .iter()
            .find(|f| !self.frames.evaluate_frame(f).unwrap_or(false))
            .map(|f| Effect::ScenarioUnmet {
                script: script.name.clone(),
                frame: f.to_string(),
            })
    }

    /// Runs the client scripts bound to `name` for session `token`. Only
    /// overlays and materialized pages can change.
    pub fn dispatch(&mut self, token: &str, name: &str, args: BTreeMap<String, Value>) -> (Event, Vec<Effect>) {
        let event = Event {
            name: name.to_string(),
            args,
            token: Some(token.to_string()),
            timestamp: self.events.stamp(),
        };
        let mut effects = Vec::new();
        if !self.events.knows_event(name) {
            effects.push(Effect::Warning {
                message: EventError::UnknownEvent(name.to_string()).to_string(),
            });
            return (event, effects);
        }
        for script in self.events.bound(name, false) {
            if let Some(unmet) = self.scenario_gate(&script) {
                effects.push(unmet);
                continue;
            }
            for action in &script.actions {
                match action {
                    Action::Set { page, field, expr } => match expr.evaluate(&event.args, None) {
                        Ok(value) => {
                            self.events.set_overlay(token, page, field, value.clone());
                            effects.push(Effect::OverlaySet {
                                page: page.clone(),
                                field: field.clone(),
                                value,
                            });
                        }
                        Err(e) => effects.push(Effect::Warning { message: e.to_string() }),
                    },
                    Action::Refresh { page } => {
                        self.refresh_page(page);
                        effects.push(Effect::PageRefreshed { page: page.clone() });
                    }
                    Action::Transition { individual, .. } => effects.push(Effect::Warning {
                        message: format!("client script `{}` cannot transition `{individual}`", script.name),
                    }),
                }
            }
        }
        (event, effects)
    }

    /// Runs the hook scripts bound to `name`: a warehouse-side update that
    /// may transition schema individuals.
    pub fn fire_hook(
        &mut self,
        name: &str,
        args: BTreeMap<String, Value>,
        content_critical: bool,
    ) -> Result<Vec<Effect>, EngineError> {
        let scripts = self.events.bound(name, true);
        if scripts.is_empty() {
            return Err(EventError::UnknownEvent(name.to_string()).into());
        }
        self.events.stamp();
        let mut effects = Vec::new();
        let mut touched = BTreeSet::new();
        for script in scripts {
            if let Some(unmet) = self.scenario_gate(&script) {
                effects.push(unmet);
                continue;
            }
            for action in &script.actions {
                match action {
                    Action::Transition { individual, values } => {
                        match self.run_transition(&script.name, individual, values, &args) {
                            Ok((concept, version)) => {
                                touched.insert(concept_source(&concept));
                                effects.push(Effect::Transitioned {
                                    individual: individual.clone(),
                                    version,
                                });
                            }
                            Err(message) => effects.push(Effect::Warning { message }),
                        }
                    }
                    Action::Refresh { page } => {
                        self.refresh_page(page);
                        effects.push(Effect::PageRefreshed { page: page.clone() });
                    }
                    Action::Set { page, field, .. } => effects.push(Effect::Warning {
                        message: format!("hook `{}` has no session for {page}.{field}", script.name),
                    }),
                }
            }
        }
        if !touched.is_empty() {
            self.tower.refresh(self.warehouse.store());
            self.touch(&touched);
            if content_critical {
                let marks = self.mark_content_critical(&touched)?;
                effects.extend(marks.marked.into_iter().map(|page| Effect::PageMarked { page }));
                effects.extend(marks.refreshed.into_iter().map(|page| Effect::PageRefreshed { page }));
            }
        }
        Ok(effects)
    }

    fn run_transition(
        &mut self,
        script: &str,
        individual: &str,
        exprs: &BTreeMap<String, crate::events::Expr>,
        args: &BTreeMap<String, Value>,
    ) -> Result<(String, u64), String> {
        let store = self.warehouse.store();
        let ind = store
            .individual(individual)
            .ok_or_else(|| format!("unknown individual `{individual}`"))?;
        let current = ind.current().values.clone();
        let concept = store.concept(ind.concept()).expect("individuals have concepts").clone();
        let mut values = BTreeMap::new();
        for (field, expr) in exprs {
            let v = expr.evaluate(args, Some(&current)).map_err(|e| e.to_string())?;
            let kind = concept
                .kind_of(field)
                .ok_or_else(|| format!("unknown field `{field}`"))?;
            let v = v.clone().coerce_to(kind).ok_or_else(|| format!("field `{field}` expects {kind}, got {v}"))?;
            values.insert(field.clone(), v);
        }
        let ind = self
            .warehouse
            .store_mut()
            .transition(individual, values, script)
            .map_err(|e| e.to_string())?;
        Ok((concept.name().to_string(), ind.current().version))
    }
}

