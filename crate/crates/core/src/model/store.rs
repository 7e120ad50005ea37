use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Concept, Individual, ModelError, StateRecord, Version, INITIAL_CAUSE};
use crate::hash::content_hash;
use crate::predicate::Predicate;
use crate::value::{Kind, Value};

/// In-memory store of concepts and individuals.
///
/// Individual ids are unique across the whole store so that metadata,
/// frames and portal items can address any individual by id alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Store {
    concepts: BTreeMap<String, Concept>,
    individuals: BTreeMap<String, Individual>,
}

/// A validated assignment `h : I -> T` from an index set into the
/// individuals of one concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortVariable {
    pub concept: String,
    pub assignment: BTreeMap<String, String>,
}

impl SortVariable {
    pub fn index_set(&self) -> impl Iterator<Item = &str> {
        self.assignment.keys().map(String::as_str)
    }

    pub fn get(&self, index: &str) -> Option<&str> {
        self.assignment.get(index).map(String::as_str)
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define_concept(&mut self, concept: Concept) -> Result<(), ModelError> {
        if self.concepts.contains_key(concept.name()) {
            return Err(ModelError::DuplicateConcept(concept.name().to_string()));
        }
        self.concepts.insert(concept.name().to_string(), concept);
        Ok(())
    }

    pub fn concept(&self, name: &str) -> Option<&Concept> {
        self.concepts.get(name)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn individual(&self, id: &str) -> Option<&Individual> {
        self.individuals.get(id)
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.values()
    }

    pub fn individuals_of<'a>(&'a self, concept: &'a str) -> impl Iterator<Item = &'a Individual> {
        self.individuals.values().filter(move |i| i.concept == concept)
    }

    /// Ids of every individual of `concept`, the default comprehension
    /// domain for that concept.
    pub fn extent(&self, concept: &str) -> BTreeSet<String> {
        self.individuals_of(concept).map(|i| i.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn content_hash(&self) -> String {
        content_hash(self)
    }

    /// Creates an individual with its initial state (version 0).
    ///
    /// Reference targets are not resolved here so that declarations may
    /// refer forward; see [`Store::dangling_references`].
    pub fn create(
        &mut self,
        id: impl Into<String>,
        concept: &str,
        values: BTreeMap<String, Value>,
        cause: Option<&str>,
    ) -> Result<&Individual, ModelError> {
        let id = id.into();
        if self.individuals.contains_key(&id) {
            return Err(ModelError::DuplicateIndividual(id));
        }
        let c = self
            .concepts
            .get(concept)
            .ok_or_else(|| ModelError::UnknownConcept(concept.to_string()))?;
        let values = c.check_total(values)?;
        let individual = Individual {
            id: id.clone(),
            concept: concept.to_string(),
            states: vec![StateRecord {
                version: 0,
                values,
                cause: cause.unwrap_or(INITIAL_CAUSE).to_string(),
            }],
        };
        Ok(self.individuals.entry(id).or_insert(individual))
    }

    /// Every reference value, in any state, whose target is missing or of
    /// the wrong concept.
    pub fn dangling_references(&self) -> Vec<ModelError> {
        let mut out = Vec::new();
        for ind in self.individuals.values() {
            let concept = &self.concepts[&ind.concept];
            for state in &ind.states {
                for (field, v) in &state.values {
                    if let Err(e) = self.check_reference(concept, field, v) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }

    fn check_reference(&self, concept: &Concept, field: &str, v: &Value) -> Result<(), ModelError> {
        if let (Some(Kind::Ref(target_concept)), Value::Ref(target)) = (concept.kind_of(field), v) {
            let ok = self
                .individuals
                .get(target)
                .is_some_and(|t| &t.concept == target_concept);
            if !ok {
                return Err(ModelError::DanglingReference {
                    field: field.to_string(),
                    target: target.clone(),
                    concept: target_concept.clone(),
                });
            }
        }
        Ok(())
    }

    /// Appends a state whose values are the current state overlaid with
    /// `new_values`. Earlier states are never touched.
    pub fn transition(
        &mut self,
        id: &str,
        new_values: BTreeMap<String, Value>,
        cause: &str,
    ) -> Result<&Individual, ModelError> {
        let ind = self
            .individuals
            .get(id)
            .ok_or_else(|| ModelError::UnknownIndividual(id.to_string()))?;
        let concept = &self.concepts[&ind.concept];
        let new_values = concept.check_partial(new_values)?;
        for (field, v) in &new_values {
            self.check_reference(concept, field, v)?;
        }
        let prev = ind.current();
        let mut values = prev.values.clone();
        values.extend(new_values);
        let record = StateRecord {
            version: prev.version + 1,
            values,
            cause: cause.to_string(),
        };
        let ind = self.individuals.get_mut(id).expect("checked above");
        ind.states.push(record);
        Ok(ind)
    }

    fn domain_members<'a>(
        &'a self,
        concept: &str,
        domain: &BTreeSet<String>,
    ) -> Result<(&'a Concept, Vec<&'a Individual>), ModelError> {
        let c = self
            .concepts
            .get(concept)
            .ok_or_else(|| ModelError::UnknownConcept(concept.to_string()))?;
        let members = domain
            .iter()
            .map(|id| {
                let ind = self
                    .individuals
                    .get(id)
                    .ok_or_else(|| ModelError::UnknownIndividual(id.clone()))?;
                if ind.concept != concept {
                    return Err(ModelError::ConceptMismatch {
                        individual: id.clone(),
                        expected: concept.to_string(),
                        found: ind.concept.clone(),
                    });
                }
                Ok(ind)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((c, members))
    }

    /// `{x : D | phi}` at the given valuation index.
    pub fn comprehend(
        &self,
        concept: &str,
        domain: &BTreeSet<String>,
        phi: &Predicate,
        version: Version,
    ) -> Result<BTreeSet<String>, ModelError> {
        let (c, members) = self.domain_members(concept, domain)?;
        phi.validate(&c.shape())?;
        let mut views = Vec::with_capacity(members.len());
        for ind in members {
            let view = ind.view(version).ok_or_else(|| ModelError::UnknownVersion {
                individual: ind.id.clone(),
                version: match version {
                    Version::At(v) => v,
                    Version::Current => 0,
                },
            })?;
            views.push(view);
        }
        Ok(views
            .into_iter()
            .filter(|v| phi.evaluate(v))
            .map(|v| v.individual.id.clone())
            .collect())
    }

    /// The unique `d` with `{d} = {x : D | phi}`.
    pub fn individualize(
        &self,
        concept: &str,
        domain: &BTreeSet<String>,
        phi: &Predicate,
        version: Version,
    ) -> Result<&Individual, ModelError> {
        let hits = self.comprehend(concept, domain, phi, version)?;
        match hits.len() {
            0 => Err(ModelError::NotIndividualized),
            1 => Ok(&self.individuals[hits.first().expect("one hit")]),
            count => Err(ModelError::AmbiguousDescription { count }),
        }
    }

    pub fn bind_sort(
        &self,
        index_set: &BTreeSet<String>,
        concept: &str,
        mapping: &BTreeMap<String, String>,
    ) -> Result<SortVariable, ModelError> {
        if !self.concepts.contains_key(concept) {
            return Err(ModelError::UnknownConcept(concept.to_string()));
        }
        if let Some(stray) = mapping.keys().find(|k| !index_set.contains(*k)) {
            return Err(ModelError::UnknownIndex(stray.clone()));
        }
        for index in index_set {
            let target = mapping
                .get(index)
                .ok_or_else(|| ModelError::PartialAssignment(index.clone()))?;
            let ind = self
                .individuals
                .get(target)
                .ok_or_else(|| ModelError::UnknownIndividual(target.clone()))?;
            if ind.concept != concept {
                return Err(ModelError::ConceptMismatch {
                    individual: target.clone(),
                    expected: concept.to_string(),
                    found: ind.concept.clone(),
                });
            }
        }
        Ok(SortVariable {
            concept: concept.to_string(),
            assignment: mapping.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::{CmpOp, Operand};

    fn visitor_store() -> Store {
        let mut s = Store::new();
        s.define_concept(
            Concept::new(
                "Visitor",
                [
                    ("status".to_string(), Kind::Text),
                    ("visits".to_string(), Kind::Integer),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        s.define_concept(Concept::new("Finance", [("amount".to_string(), Kind::Real)]).unwrap())
            .unwrap();
        for (id, status, visits) in [
            ("a", "registered", 3),
            ("b", "unregistered", 0),
            ("c", "corporate", 7),
        ] {
            s.create(
                id,
                "Visitor",
                [
                    ("status".to_string(), Value::Text(status.into())),
                    ("visits".to_string(), Value::Integer(visits)),
                ]
                .into_iter()
                .collect(),
                None,
            )
            .unwrap();
        }
        s.create(
            "f1",
            "Finance",
            [("amount".to_string(), Value::Real(1.0))].into_iter().collect(),
            None,
        )
        .unwrap();
        s
    }

    fn ids(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn status_ne(v: &str) -> Predicate {
        Predicate::Compare {
            op: CmpOp::Ne,
            left: Operand::Field("status".into()),
            right: Operand::Literal(Value::Text(v.into())),
        }
    }

    #[test]
    fn trivial_comprehensions() {
        let s = visitor_store();
        let d = s.extent("Visitor");
        let all = s.comprehend("Visitor", &d, &Predicate::Const(true), Version::Current);
        assert_eq!(all.unwrap(), d);
        let none = s.comprehend("Visitor", &d, &Predicate::Const(false), Version::Current);
        assert!(none.unwrap().is_empty());
    }

    #[test]
    fn status_filter_matches_linear_scan() {
        let s = visitor_store();
        let d = s.extent("Visitor");
        let phi = status_ne("unregistered");
        // Oracle: scan the raw state maps.
        let expected: BTreeSet<String> = s
            .individuals_of("Visitor")
            .filter(|i| i.current().values["status"] != Value::Text("unregistered".into()))
            .map(|i| i.id().to_string())
            .collect();
        assert_eq!(expected, ids(&["a", "c"]));
        assert_eq!(s.comprehend("Visitor", &d, &phi, Version::Current).unwrap(), expected);
    }

    #[test]
    fn comprehension_errors() {
        let s = visitor_store();
        let d = s.extent("Visitor");
        let bad = Predicate::field_eq("salary", Value::Integer(1));
        assert!(matches!(
            s.comprehend("Visitor", &d, &bad, Version::Current),
            Err(ModelError::IllTypedPredicate(_))
        ));
        assert!(matches!(
            s.comprehend("Visitor", &d, &Predicate::Const(true), Version::At(4)),
            Err(ModelError::UnknownVersion { .. })
        ));
        assert!(matches!(
            s.comprehend("Visitor", &ids(&["a", "f1"]), &Predicate::Const(true), Version::Current),
            Err(ModelError::ConceptMismatch { .. })
        ));
    }

    #[test]
    fn individualization() {
        let s = visitor_store();
        let single = ids(&["a"]);
        let got = s.individualize("Visitor", &single, &Predicate::Const(true), Version::Current);
        assert_eq!(got.unwrap().id(), "a");

        let d = s.extent("Visitor");
        let corporate = Predicate::field_eq("status", Value::Text("corporate".into()));
        let hits = s
            .individuals_of("Visitor")
            .filter(|i| i.current().values["status"] == Value::Text("corporate".into()))
            .count();
        assert_eq!(hits, 1);
        assert_eq!(
            s.individualize("Visitor", &d, &corporate, Version::Current).unwrap().id(),
            "c"
        );

        let two = status_ne("unregistered");
        assert_eq!(
            s.individualize("Visitor", &d, &two, Version::Current).unwrap_err(),
            ModelError::AmbiguousDescription { count: 2 }
        );
        assert_eq!(
            s.individualize("Visitor", &d, &Predicate::Const(false), Version::Current)
                .unwrap_err(),
            ModelError::NotIndividualized
        );
    }

    #[test]
    fn transition_overlays_and_preserves_history() {
        let mut s = visitor_store();
        let before = s.individual("a").unwrap().states()[0].clone();
        let ind = s.transition("a", BTreeMap::new(), "e0").unwrap();
        assert_eq!(ind.states().len(), 2);
        assert_eq!(ind.current().version, 1);
        assert_eq!(ind.current().values, before.values);

        let ind = s
            .transition("a", [("visits".to_string(), Value::Integer(6))].into_iter().collect(), "e1")
            .unwrap();
        let mut expected = before.values.clone();
        expected.insert("visits".into(), Value::Integer(6));
        assert_eq!(ind.current().version, 2);
        assert_eq!(ind.current().values, expected);
        assert_eq!(ind.current().cause, "e1");
        assert_eq!(ind.states()[0], before);

        assert!(matches!(
            s.transition("a", [("salary".to_string(), Value::Integer(1))].into_iter().collect(), "e"),
            Err(ModelError::UnknownField { .. })
        ));
        assert!(matches!(
            s.transition("a", [("visits".to_string(), Value::Text("x".into()))].into_iter().collect(), "e"),
            Err(ModelError::KindMismatch { .. })
        ));
        assert_eq!(s.individual("a").unwrap().states().len(), 3);
    }

    #[test]
    fn evaluation_at_past_version() {
        let mut s = visitor_store();
        s.transition("b", [("status".to_string(), Value::Text("registered".into()))].into_iter().collect(), "signup")
            .unwrap();
        let d = ids(&["b"]);
        let phi = Predicate::field_eq("status", Value::Text("registered".into()));
        assert!(s.comprehend("Visitor", &d, &phi, Version::At(0)).unwrap().is_empty());
        assert_eq!(s.comprehend("Visitor", &d, &phi, Version::At(1)).unwrap(), d);
    }

    #[test]
    fn sort_binding() {
        let s = visitor_store();
        let empty = s.bind_sort(&BTreeSet::new(), "Visitor", &BTreeMap::new()).unwrap();
        assert_eq!(empty.index_set().count(), 0);

        let index = ids(&["u1", "u2"]);
        let mapping: BTreeMap<String, String> =
            [("u1".to_string(), "a".to_string()), ("u2".to_string(), "c".to_string())]
                .into_iter()
                .collect();
        let sv = s.bind_sort(&index, "Visitor", &mapping).unwrap();
        assert!(index.iter().all(|i| sv.get(i).is_some()));

        let partial: BTreeMap<String, String> =
            [("u1".to_string(), "a".to_string())].into_iter().collect();
        assert_eq!(
            s.bind_sort(&index, "Visitor", &partial).unwrap_err(),
            ModelError::PartialAssignment("u2".into())
        );

        let finance: BTreeMap<String, String> =
            [("u1".to_string(), "f1".to_string())].into_iter().collect();
        assert!(matches!(
            s.bind_sort(&ids(&["u1"]), "Visitor", &finance),
            Err(ModelError::ConceptMismatch { .. })
        ));
    }

    #[test]
    fn concept_invariants() {
        assert!(matches!(
            Concept::new("X", Vec::<(String, Kind)>::new()),
            Err(ModelError::EmptyConcept(_))
        ));
        assert!(matches!(
            Concept::new("X", [("a".to_string(), Kind::Text), ("a".to_string(), Kind::Integer)]),
            Err(ModelError::DuplicateField { .. })
        ));
        assert!(matches!(
            Concept::new("X", [("id".to_string(), Kind::Text)]),
            Err(ModelError::ReservedField(_))
        ));
    }

    #[test]
    fn references_are_checked() {
        let mut s = Store::new();
        s.define_concept(Concept::new("Emp", [("boss".to_string(), Kind::Ref("Emp".into()))]).unwrap())
            .unwrap();
        s.create("e1", "Emp", [("boss".to_string(), Value::Ref("e2".into()))].into_iter().collect(), None)
            .unwrap();
        assert_eq!(s.dangling_references().len(), 1);
        s.create("e2", "Emp", [("boss".to_string(), Value::Ref("e2".into()))].into_iter().collect(), None)
            .unwrap();
        assert!(s.dangling_references().is_empty());
        assert!(matches!(
            s.transition("e1", [("boss".to_string(), Value::Ref("zz".into()))].into_iter().collect(), "x"),
            Err(ModelError::DanglingReference { .. })
        ));
    }
}
