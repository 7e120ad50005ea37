//! Installs a parsed schema into an engine, all or nothing.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::Diagnostic;
use crate::engine::Engine;
use crate::events::{Action, Expr, ScriptDef};
use crate::frames::{AtomicFrame, Term};
use crate::model::Concept;
use crate::portal::{ItemExpr, PageDef};
use crate::profile::{check_hierarchy, Chain, MetricDenotation, UserProfile};
use crate::value::Kind;
use crate::warehouse::{catalog_kind, Change};

/// Installs `schema` into `engine`, replacing it only on success.
pub fn load_into(engine: &mut Engine, schema: &Schema) -> Result<(), Vec<Diagnostic>> {
    *engine = load(engine, schema)?;
    Ok(())
}

/// Returns `engine` extended with every declaration of `schema`, or the
/// semantic diagnostics. `engine` itself is never modified.
pub fn load(engine: &Engine, schema: &Schema) -> Result<Engine, Vec<Diagnostic>> {
    let mut l = Loader {
        e: engine.clone(),
        diags: Vec::new(),
        schema_individuals: BTreeMap::new(),
    };
    l.run(schema);
    if l.diags.is_empty() {
        l.e.rebuild();
        Ok(l.e)
    } else {
        l.diags.sort_by_key(|d| (d.line, d.column));
        Err(l.diags)
    }
}

struct Loader {
    e: Engine,
    diags: Vec<Diagnostic>,
    /// Individuals declared by this schema, with their spans.
    schema_individuals: BTreeMap<String, Span>,
}

fn err(span: Span, lexeme: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(span, message, lexeme)
}

impl Loader {
    fn report(&mut self, span: Span, lexeme: &str, message: impl Into<String>) {
        self.diags.push(err(span, lexeme, message));
    }

    fn run(&mut self, schema: &Schema) {
        let decls = &schema.decls;
        let each = |f: &mut dyn FnMut(&Decl)| decls.iter().for_each(|d| f(d));
        each(&mut |d| self.dimension(d));
        each(&mut |d| self.concept(d));
        self.check_concept_refs(decls);
        each(&mut |d| self.relation(d));
        each(&mut |d| self.source(d));
        each(&mut |d| self.individual(d));
        self.check_individual_refs(decls);
        each(&mut |d| self.frame(d));
        each(&mut |d| self.profile(d));
        self.revalidate_profiles(decls);
        each(&mut |d| self.metric(d));
        each(&mut |d| self.page(d));
        if let Err(e) = check_hierarchy(&self.e.page_accesses(), &self.e.dims) {
            let span = decls.first().map(|d| d.span).unwrap_or_default();
            self.report(span, "", e.to_string());
        }
        each(&mut |d| self.script(d));
    }

    fn dimension(&mut self, d: &Decl) {
        let DeclKind::Dimension { dim, values } = &d.kind else { return };
        if !self.e.declared_dims.insert(*dim) {
            return self.report(d.span, "dimension", format!("dimension `{dim}` already declared"));
        }
        let alphabet: BTreeSet<String> = values.iter().map(|v| v.name.clone()).collect();
        if alphabet.len() != values.len() {
            return self.report(d.span, "dimension", format!("duplicate value in alphabet of `{dim}`"));
        }
        if let Err(e) = self.e.dims.declare(*dim, alphabet) {
            self.report(d.span, "dimension", e.to_string());
        }
    }

    fn concept(&mut self, d: &Decl) {
        let DeclKind::Concept { name, fields } = &d.kind else { return };
        let result = Concept::new(
            name.name.clone(),
            fields.iter().map(|(f, k)| (f.name.clone(), k.clone())),
        )
        .and_then(|c| self.e.warehouse.store_mut().define_concept(c));
        if let Err(e) = result {
            self.report(name.span, &name.name, e.to_string());
        }
    }

    fn check_concept_refs(&mut self, decls: &[Decl]) {
        for d in decls {
            let DeclKind::Concept { fields, .. } = &d.kind else { continue };
            for (f, k) in fields {
                if let Kind::Ref(target) = k {
                    if self.e.store().concept(target).is_none() {
                        self.report(f.span, &f.name, format!("field `{f}` refers to undeclared concept `{target}`"));
                    }
                }
            }
        }
    }

    fn relation(&mut self, d: &Decl) {
        let DeclKind::Relation { name } = &d.kind else { return };
        if let Err(e) = self.e.frames.declare_relation(name.name.clone()) {
            self.report(name.span, &name.name, e.to_string());
        }
    }

    fn source(&mut self, d: &Decl) {
        let DeclKind::Source { name, kind, items } = &d.kind else { return };
        if let Err(e) = self.e.warehouse.add_repository(name.name.clone(), *kind) {
            return self.report(name.span, &name.name, e.to_string());
        }
        for item in items {
            let change = Change::Insert {
                id: item.id.name.clone(),
                values: item.values.iter().map(|(k, v)| (k.name.clone(), v.to_json())).collect(),
            };
            if let Err(e) = self.e.warehouse.mutate(&name.name, &change) {
                self.report(item.id.span, &item.id.name, e.to_string());
            }
        }
    }

    fn individual(&mut self, d: &Decl) {
        let DeclKind::Individual { name, concept, values } = &d.kind else { return };
        if self.e.warehouse.adapter_for_concept(&concept.name).is_some() {
            return self.report(
                concept.span,
                &concept.name,
                format!("concept `{concept}` is backed by a repository; declare its items in a source block"),
            );
        }
        let Some(c) = self.e.store().concept(&concept.name).cloned() else {
            return self.report(concept.span, &concept.name, format!("undeclared concept `{concept}`"));
        };
        let mut typed = BTreeMap::new();
        for (field, lit) in values {
            let Some(kind) = c.kind_of(&field.name) else {
                self.report(field.span, &field.name, format!("unknown field `{field}` for concept `{concept}`"));
                continue;
            };
            match lit.clone().coerce_to(kind) {
                Some(_) if typed.contains_key(&field.name) => {
                    self.report(field.span, &field.name, format!("field `{field}` assigned twice"))
                }
                Some(v) => {
                    typed.insert(field.name.clone(), v);
                }
                None => self.report(
                    field.span,
                    &field.name,
                    format!("field `{field}` expects {kind}, got {lit}"),
                ),
            }
        }
        if typed.len() != values.len() {
            return;
        }
        match self.e.warehouse.store_mut().create(name.name.clone(), &concept.name, typed, None) {
            Ok(_) => {
                self.schema_individuals.insert(name.name.clone(), name.span);
            }
            Err(e) => self.report(name.span, &name.name, e.to_string()),
        }
    }

    fn check_individual_refs(&mut self, decls: &[Decl]) {
        for d in decls {
            let DeclKind::Individual { name, concept, values } = &d.kind else { continue };
            if !self.schema_individuals.contains_key(&name.name) {
                continue;
            }
            let c = self.e.store().concept(&concept.name).expect("created").clone();
            for (field, lit) in values {
                let (Some(Kind::Ref(target_concept)), Some(target)) = (c.kind_of(&field.name), lit.as_str()) else {
                    continue;
                };
                let ok = self
                    .e
                    .store()
                    .individual(target)
                    .is_some_and(|t| t.concept() == target_concept);
                if !ok {
                    self.report(
                        field.span,
                        &field.name,
                        format!("`{target}` is not an individual of concept `{target_concept}`"),
                    );
                }
            }
        }
    }

    fn check_constant(&self, name: &str) -> Result<(), String> {
        if self.e.store().individual(name).is_some() {
            Ok(())
        } else {
            Err(format!("frame constant `{name}` is not a declared individual"))
        }
    }

    fn check_frame(&self, frame: &AtomicFrame) -> Result<(), String> {
        if !self.e.frames.relations().contains(&frame.relation) {
            return Err(format!("undeclared relation `{}`", frame.relation));
        }
        self.check_constant(&frame.subject)?;
        self.check_constant(&frame.object)
    }

    fn frame(&mut self, d: &Decl) {
        let DeclKind::Frame { frame } = &d.kind else { return };
        if let Err(m) = self.check_frame(frame) {
            return self.report(d.span, "frame", m);
        }
        self.e.frames.declare_constant(frame.subject.clone());
        self.e.frames.declare_constant(frame.object.clone());
        self.e.frames.assert_frame(frame).expect("checked");
    }

    fn profile(&mut self, d: &Decl) {
        let DeclKind::Profile { name, rank, dims } = &d.kind else { return };
        if self.e.profiles.contains_key(&name.name) {
            return self.report(name.span, &name.name, format!("profile `{name}` already declared"));
        }
        let profile = UserProfile {
            user_id: name.name.clone(),
            rank: *rank,
            dims: dims.iter().map(|(d, v)| (*d, v.name.clone())).collect(),
        };
        self.e.profiles.insert(name.name.clone(), profile);
    }

    /// Profiles are checked after every dimension of this schema is known,
    /// including profiles from earlier loads.
    fn revalidate_profiles(&mut self, decls: &[Decl]) {
        let spans: BTreeMap<&str, Span> = decls
            .iter()
            .filter_map(|d| match &d.kind {
                DeclKind::Profile { name, .. } => Some((name.name.as_str(), name.span)),
                _ => None,
            })
            .collect();
        let problems: Vec<(String, String)> = self
            .e
            .profiles
            .values()
            .filter_map(|p| p.validate(&self.e.dims).err().map(|e| (p.user_id.clone(), e.to_string())))
            .collect();
        for (name, message) in problems {
            let span = spans.get(name.as_str()).copied().unwrap_or_default();
            self.report(span, &name, message);
        }
    }

    fn metric(&mut self, d: &Decl) {
        let DeclKind::Metric {
            name,
            order,
            saturates,
            rows,
        } = &d.kind
        else {
            return;
        };
        if self.e.metrics.contains_key(&name.name) {
            return self.report(name.span, &name.name, format!("metric `{name}` already declared"));
        }
        let mut table: Vec<(Chain, BTreeSet<String>)> = Vec::new();
        for row in rows {
            let chain: Chain = row.chain.iter().map(|(d, v)| (*d, v.name.clone())).collect();
            if table.iter().any(|(c, _)| *c == chain) {
                let text = crate::profile::format_chain(&chain);
                return self.report(name.span, &name.name, format!("metric `{name}`: duplicate row for chain {text}"));
            }
            table.push((chain, row.values.iter().map(|v| v.name.clone()).collect()));
        }
        match MetricDenotation::new(name.name.clone(), order.clone(), table, *saturates, &self.e.dims) {
            Ok(m) => {
                self.e.metrics.insert(name.name.clone(), m);
            }
            Err(e) => self.report(name.span, &name.name, e.to_string()),
        }
    }

    fn page(&mut self, d: &Decl) {
        let DeclKind::Page {
            name,
            required,
            conditions,
            items,
        } = &d.kind
        else {
            return;
        };
        if self.e.page(&name.name).is_some() {
            return self.report(name.span, &name.name, format!("page `{name}` already declared"));
        }
        let before = self.diags.len();
        for (dim, v) in conditions {
            if let Err(e) = self.e.dims.check_value(*dim, &v.name) {
                self.report(v.span, &v.name, e.to_string());
            }
        }
        for item in items {
            if let Err(m) = self.check_item(item) {
                self.report(name.span, &name.name, format!("page `{name}`: {m}"));
            }
        }
        if self.diags.len() == before {
            self.e.pages.push(PageDef {
                id: name.name.clone(),
                required: *required,
                conditions: conditions.iter().map(|(d, v)| (*d, v.name.clone())).collect(),
                items: items.clone(),
            });
        }
    }

    fn check_item(&self, item: &ItemExpr) -> Result<(), String> {
        match item {
            ItemExpr::Key { key } => match catalog_kind(key) {
                Some(_) => Ok(()),
                None => Err(format!("`{key}` is not a portal catalog key")),
            },
            ItemExpr::Query { pattern } => {
                if !self.e.frames.relations().contains(&pattern.relation) {
                    return Err(format!("undeclared relation `{}`", pattern.relation));
                }
                for t in [&pattern.subject, &pattern.object] {
                    if let Term::Const(c) = t {
                        self.check_constant(c)?;
                    }
                }
                Ok(())
            }
            ItemExpr::Count { concept, predicate } => {
                let c = self
                    .e
                    .store()
                    .concept(concept)
                    .ok_or_else(|| format!("undeclared concept `{concept}`"))?;
                predicate.validate(&c.shape()).map_err(|e| e.to_string())
            }
        }
    }

    fn script(&mut self, d: &Decl) {
        let DeclKind::Script {
            name,
            hook,
            trigger,
            scenario,
            actions,
        } = &d.kind
        else {
            return;
        };
        if self.e.events.scripts().iter().any(|s| s.name == name.name) {
            return self.report(name.span, &name.name, format!("script `{name}` already declared"));
        }
        let before = self.diags.len();
        for frame in scenario {
            if let Err(m) = self.check_frame(frame) {
                self.report(name.span, &name.name, format!("script `{name}` scenario: {m}"));
            }
        }
        for action in actions {
            if let Err(m) = self.check_action(*hook, action) {
                self.report(name.span, &name.name, format!("script `{name}`: {m}"));
            }
        }
        if self.diags.len() == before {
            self.e.events.add_script(ScriptDef {
                name: name.name.clone(),
                trigger: trigger.name.clone(),
                hook: *hook,
                actions: actions.clone(),
                scenario: scenario.clone(),
            });
        }
    }

    fn check_page_ref(&self, page: &str) -> Result<(), String> {
        match self.e.page(page) {
            Some(_) => Ok(()),
            None => Err(format!("undeclared page `{page}`")),
        }
    }

    fn check_action(&self, hook: bool, action: &Action) -> Result<(), String> {
        match action {
            Action::Set { page, expr, .. } => {
                if hook {
                    return Err("hook scripts have no session and cannot `set` page fields".into());
                }
                if expr.mentions_field() {
                    return Err("`set` expressions may only use literals and `$arguments`".into());
                }
                self.check_page_ref(page)
            }
            Action::Refresh { page } => self.check_page_ref(page),
            Action::Transition { individual, values } => {
                if !hook {
                    return Err(format!(
                        "`transition {individual}` is only allowed in hook scripts; client scripts cannot change the warehouse"
                    ));
                }
                let store = self.e.store();
                let ind = store
                    .individual(individual)
                    .ok_or_else(|| format!("undeclared individual `{individual}`"))?;
                if self.e.warehouse.adapter_for_concept(ind.concept()).is_some() {
                    return Err(format!(
                        "`{individual}` is a repository item; change it through a warehouse update"
                    ));
                }
                let concept = store.concept(ind.concept()).expect("individuals have concepts");
                for (field, expr) in values {
                    let kind = concept
                        .kind_of(field)
                        .ok_or_else(|| format!("unknown field `{field}` for concept `{}`", concept.name()))?;
                    check_expr_fields(expr, concept)?;
                    if let Expr::Literal(v) = expr {
                        if v.clone().coerce_to(kind).is_none() {
                            return Err(format!("field `{field}` expects {kind}, got {v}"));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_expr_fields(expr: &Expr, concept: &Concept) -> Result<(), String> {
    match expr {
        Expr::Field(f) if concept.kind_of(f).is_none() => {
            Err(format!("unknown field `{f}` for concept `{}`", concept.name()))
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            check_expr_fields(a, concept)?;
            check_expr_fields(b, concept)
        }
        _ => Ok(()),
    }
}
