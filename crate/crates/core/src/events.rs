//! Events, scripts and the update agent's bookkeeping.
//!
//! Client-triggered scripts may only touch per-session page overlays or
//! refresh materialized pages. Scripts flagged as hooks run on warehouse
//! update requests and are the only ones allowed to transition
//! individuals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::AtomicFrame;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("unknown page `{0}`")]
    UnknownPage(String),
    #[error("periodic policy needs a period of at least 1")]
    ZeroPeriod,
    #[error("cannot evaluate expression: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Literal(Value),
    /// Event argument `$name`.
    Arg(String),
    /// Current value of a field of the individual being transitioned.
    Field(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn evaluate(
        &self,
        args: &BTreeMap<String, Value>,
        fields: Option<&BTreeMap<String, Value>>,
    ) -> Result<Value, EventError> {
        match self {
            Expr::Literal(v) => Ok(v.clone()),
            Expr::Arg(a) => args
                .get(a)
                .cloned()
                .ok_or_else(|| EventError::Evaluation(format!("missing argument `${a}`"))),
            Expr::Field(f) => fields
                .and_then(|m| m.get(f))
                .cloned()
                .ok_or_else(|| EventError::Evaluation(format!("no field `{f}` in scope"))),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (x, y) = (a.evaluate(args, fields)?, b.evaluate(args, fields)?);
                let add = matches!(self, Expr::Add(..));
                match (&x, &y) {
                    (Value::Integer(i), Value::Integer(j)) => {
                        let r = if add { i.checked_add(*j) } else { i.checked_sub(*j) };
                        r.map(Value::Integer)
                            .ok_or_else(|| EventError::Evaluation("integer overflow".into()))
                    }
                    _ => match (x.as_f64(), y.as_f64()) {
                        (Some(p), Some(q)) => Ok(Value::Real(if add { p + q } else { p - q })),
                        _ => Err(EventError::Evaluation(format!("cannot combine {x} and {y}"))),
                    },
                }
            }
        }
    }

    pub fn mentions_field(&self) -> bool {
        match self {
            Expr::Field(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) => a.mentions_field() || b.mentions_field(),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Arg(a) => write!(f, "${a}"),
            Expr::Field(n) => f.write_str(n),
            Expr::Add(a, b) => write!(f, "{a} + {}", Paren(b)),
            Expr::Sub(a, b) => write!(f, "{a} - {}", Paren(b)),
        }
    }
}

/// Right operands of `+`/`-` need parentheses when compound.
struct Paren<'a>(&'a Expr);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            e @ (Expr::Add(..) | Expr::Sub(..)) => write!(f, "({e})"),
            e => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Set { page: String, field: String, expr: Expr },
    Refresh { page: String },
    Transition { individual: String, values: BTreeMap<String, Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptDef {
    pub name: String,
    pub trigger: String,
    /// Warehouse-update hook rather than client-triggered.
    pub hook: bool,
    pub actions: Vec<Action>,
    /// Frames that must all hold for the script to run.
    pub scenario: Vec<AtomicFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub args: BTreeMap<String, Value>,
    pub token: Option<String>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    OverlaySet { page: String, field: String, value: Value },
    PageRefreshed { page: String },
    Transitioned { individual: String, version: u64 },
    PageMarked { page: String },
    ScenarioUnmet { script: String, frame: String },
    Warning { message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum UpdatePolicy {
    #[default]
    EventDriven,
    Periodic { period: u64 },
    Manual,
}

impl UpdatePolicy {
    pub fn periodic(period: u64) -> Result<Self, EventError> {
        if period == 0 {
            return Err(EventError::ZeroPeriod);
        }
        Ok(UpdatePolicy::Periodic { period })
    }

    /// Whether the agent refreshes pending pages at `tick`.
    pub fn refreshes_at(self, tick: u64) -> bool {
        match self {
            UpdatePolicy::EventDriven => true,
            UpdatePolicy::Periodic { period } => tick % period == 0,
            UpdatePolicy::Manual => false,
        }
    }
}

impl fmt::Display for UpdatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdatePolicy::EventDriven => f.write_str("event"),
            UpdatePolicy::Periodic { period } => write!(f, "periodic({period})"),
            UpdatePolicy::Manual => f.write_str("manual"),
        }
    }
}

pub type Overlay = BTreeMap<String, BTreeMap<String, Value>>;

/// Mutable event-side state: scripts, the logical clock, pending refresh
/// marks and per-session overlays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventEngine {
    scripts: Vec<ScriptDef>,
    policy: UpdatePolicy,
    clock: u64,
    tick: u64,
    pending: BTreeSet<String>,
    overlays: HashMap<String, Overlay>,
}

impl EventEngine {
    pub fn scripts(&self) -> &[ScriptDef] {
        &self.scripts
    }

    pub fn add_script(&mut self, script: ScriptDef) {
        self.scripts.push(script);
    }

    pub fn policy(&self) -> UpdatePolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: UpdatePolicy) {
        self.policy = policy;
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    /// Next logical timestamp; strictly increasing.
    pub fn stamp(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn knows_event(&self, name: &str) -> bool {
        self.scripts.iter().any(|s| s.trigger == name)
    }

    /// Scripts bound to `name`, in declaration order.
    pub fn bound(&self, name: &str, hook: bool) -> Vec<ScriptDef> {
        self.scripts
            .iter()
            .filter(|s| s.trigger == name && s.hook == hook)
            .cloned()
            .collect()
    }

    pub fn pending(&self) -> &BTreeSet<String> {
        &self.pending
    }

    /// Adds a mark; marks on one page coalesce.
    pub fn mark(&mut self, page: &str) -> bool {
        self.pending.insert(page.to_string())
    }

    pub fn clear_mark(&mut self, page: &str) {
        self.pending.remove(page);
    }

    pub fn overlay(&self, token: &str, page: &str) -> BTreeMap<String, Value> {
        self.overlays
            .get(token)
            .and_then(|o| o.get(page))
            .cloned()
            .unwrap_or_default()
    }

    pub fn set_overlay(&mut self, token: &str, page: &str, field: &str, value: Value) {
        self.overlays
            .entry(token.to_string())
            .or_default()
            .entry(page.to_string())
            .or_default()
            .insert(field.to_string(), value);
    }

    pub fn drop_session(&mut self, token: &str) {
        self.overlays.remove(token);
    }

    pub fn has_overlays(&self, token: &str) -> bool {
        self.overlays.contains_key(token)
    }
}
