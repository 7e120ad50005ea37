//! Cartridge adapters: one per repository kind, translating between the
//! native record shape and the kind's core-model concept.

use std::collections::BTreeMap;

use super::native::*;
use super::WarehouseError;
use crate::model::Concept;
use crate::value::{Kind, Value};

pub const EMPLOYEE: &str = "Employee";
pub const FINANCIAL_FIGURE: &str = "FinancialFigure";
pub const MEDIA_ASSET: &str = "MediaAsset";
pub const CONTACT: &str = "Contact";

#[derive(Debug, Clone, PartialEq)]
pub struct CartridgeAdapter {
    kind: RepoKind,
    concept: Concept,
}

fn concept(name: &str, fields: &[(&str, Kind)]) -> Concept {
    Concept::new(name, fields.iter().map(|(f, k)| (f.to_string(), k.clone())))
        .expect("built-in concepts are well formed")
}

impl CartridgeAdapter {
    pub fn for_kind(kind: RepoKind) -> Self {
        let concept = match kind {
            RepoKind::Hr => concept(
                EMPLOYEE,
                &[
                    ("fullName", Kind::Text),
                    ("country", Kind::Text),
                    ("company", Kind::Text),
                    ("position", Kind::Text),
                    ("openVacancy", Kind::Boolean),
                ],
            ),
            RepoKind::Finance => concept(FINANCIAL_FIGURE, &[("amount", Kind::Real), ("period", Kind::Text)]),
            RepoKind::Media => concept(
                MEDIA_ASSET,
                &[
                    ("category", Kind::Text),
                    ("subCategory", Kind::Text),
                    ("format", Kind::Text),
                    ("payload", Kind::Media),
                ],
            ),
            RepoKind::Docs => concept(
                CONTACT,
                &[
                    ("name", Kind::Text),
                    ("department", Kind::Text),
                    ("email", Kind::Text),
                    ("phone", Kind::Text),
                ],
            ),
        };
        CartridgeAdapter { kind, concept }
    }

    pub fn all() -> Vec<CartridgeAdapter> {
        RepoKind::ALL.into_iter().map(Self::for_kind).collect()
    }

    pub fn kind(&self) -> RepoKind {
        self.kind
    }

    pub fn concept(&self) -> &Concept {
        &self.concept
    }

    /// Native record to concept-shaped attribute values.
    pub fn encode(&self, record: &NativeRecord) -> BTreeMap<String, Value> {
        let text = |s: &str| Value::Text(s.to_string());
        let pairs: Vec<(&str, Value)> = match record {
            NativeRecord::Hr(r) => vec![
                ("fullName", text(&r.full_name)),
                ("country", text(&r.country)),
                ("company", text(&r.company)),
                ("position", text(&r.position)),
                ("openVacancy", Value::Boolean(r.open_vacancy)),
            ],
            NativeRecord::Finance(r) => vec![("amount", Value::Real(r.amount)), ("period", text(&r.period))],
            NativeRecord::Media(m) => vec![
                ("category", text(m.category.as_str())),
                ("subCategory", text(m.sub_category.map(ImageKind::as_str).unwrap_or(""))),
                ("format", text(&m.format)),
                ("payload", Value::Media(m.payload.clone())),
            ],
            NativeRecord::Docs(c) => vec![
                ("name", text(&c.name)),
                ("department", text(&c.department)),
                ("email", text(&c.email)),
                ("phone", text(&c.phone)),
            ],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Concept-shaped values to a native record. Every field is required.
    pub fn decode(&self, values: BTreeMap<String, Value>) -> Result<NativeRecord, WarehouseError> {
        let values = self
            .concept
            .check_total(values)
            .map_err(|e| WarehouseError::MalformedChange(e.to_string()))?;
        let text = |f: &str| values[f].as_str().expect("checked kind").to_string();
        Ok(match self.kind {
            RepoKind::Hr => NativeRecord::Hr(StaffRecord {
                full_name: text("fullName"),
                country: text("country"),
                company: text("company"),
                position: text("position"),
                open_vacancy: values["openVacancy"].as_bool().expect("checked kind"),
            }),
            RepoKind::Finance => NativeRecord::Finance(LedgerEntry {
                amount: values["amount"].as_f64().expect("checked kind"),
                period: text("period"),
            }),
            RepoKind::Media => {
                let category: MediaCategory = text("category").parse().map_err(WarehouseError::MalformedChange)?;
                let sub = text("subCategory");
                let sub_category = match (category, sub.as_str()) {
                    (MediaCategory::StaticImage, "") => {
                        return Err(WarehouseError::MalformedChange(
                            "static images need a sub-category".into(),
                        ))
                    }
                    (MediaCategory::StaticImage, s) => Some(s.parse().map_err(WarehouseError::MalformedChange)?),
                    (_, "") => None,
                    (c, _) => {
                        return Err(WarehouseError::MalformedChange(format!(
                            "{} records take no sub-category",
                            c.as_str()
                        )))
                    }
                };
                NativeRecord::Media(MediaObject {
                    category,
                    sub_category,
                    format: text("format"),
                    payload: text("payload"),
                })
            }
            RepoKind::Docs => NativeRecord::Docs(ContactRecord {
                name: text("name"),
                department: text("department"),
                email: text("email"),
                phone: text("phone"),
            }),
        })
    }
}
