//! The gateway: sessions, idempotent event submission and the engine's
//! single-writer commit point.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, RwLock};

use portalis_core::engine::{Engine, EngineError};
use portalis_core::events::{Effect, EventError};
use portalis_core::meta::{MetaError, MetadataRecord};
use portalis_core::portal::RenderedPage;
use portalis_core::profile::{Rank, Session, SessionError, SessionRegistry};
use portalis_core::value::Value;
use portalis_core::warehouse::{Change, WarehouseError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("no such page `{0}`")]
    NotFound(String),
    #[error("metadata access requires administrator rank")]
    Forbidden,
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown repository `{0}`")]
    UnknownRepository(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Engine(EngineError),
}

impl GatewayError {
    /// Stable machine-readable name, used as the `error` field of
    /// HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Session(SessionError::SessionClosed) => "SessionClosed",
            GatewayError::Session(SessionError::AlreadyClosed) => "SessionClosed",
            GatewayError::Session(SessionError::UnknownToken) => "UnknownToken",
            GatewayError::NotFound(_) => "NotFound",
            GatewayError::Forbidden => "Forbidden",
            GatewayError::UnknownObject(_) => "UnknownObject",
            GatewayError::UnknownProfile(_) => "UnknownProfile",
            GatewayError::UnknownRepository(_) => "UnknownRepository",
            GatewayError::BadRequest(_) => "BadRequest",
            GatewayError::Engine(_) => "Rejected",
        }
    }
}

impl From<EngineError> for GatewayError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::NotFound(p) => GatewayError::NotFound(p),
            EngineError::Forbidden => GatewayError::Forbidden,
            EngineError::UnknownProfile(p) => GatewayError::UnknownProfile(p),
            EngineError::Meta(MetaError::UnknownObject(o)) => GatewayError::UnknownObject(o),
            EngineError::Warehouse(WarehouseError::UnknownRepository(r)) => GatewayError::UnknownRepository(r),
            other => GatewayError::Engine(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub token: String,
    pub profile: String,
    pub rank: Rank,
    pub pages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventReceipt {
    pub timestamp: u64,
    pub effects: Vec<Effect>,
}

/// Body of `POST /warehouse/{repo}/update`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpdateRequest {
    pub change: UpdateOp,
    #[serde(default)]
    pub content_critical: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum UpdateOp {
    Insert {
        id: String,
        values: BTreeMap<String, serde_json::Value>,
    },
    Update {
        id: String,
        values: BTreeMap<String, serde_json::Value>,
    },
    /// Fires the hook scripts bound to `event`.
    Hook {
        event: String,
        #[serde(default)]
        args: BTreeMap<String, serde_json::Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReceipt {
    pub accepted: bool,
    pub revision: Option<u64>,
    pub marked: Vec<String>,
    pub refreshed: Vec<String>,
    pub effects: Vec<Effect>,
}

/// An event argument from JSON: integers stay integers, other numbers
/// become reals. Arrays, objects and null are not arguments.
pub fn arg_value(json: &serde_json::Value) -> Result<Value, GatewayError> {
    match json {
        serde_json::Value::Bool(b) => Ok(Value::Boolean(*b)),
        serde_json::Value::String(s) => Ok(Value::Text(s.clone())),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Value::Integer(i)),
            None => n
                .as_f64()
                .map(Value::Real)
                .ok_or_else(|| GatewayError::BadRequest(format!("unrepresentable number {n}"))),
        },
        other => Err(GatewayError::BadRequest(format!("unsupported argument {other}"))),
    }
}

pub fn arg_map(args: &BTreeMap<String, serde_json::Value>) -> Result<BTreeMap<String, Value>, GatewayError> {
    args.iter().map(|(k, v)| Ok((k.clone(), arg_value(v)?))).collect()
}

/// Shared gateway state. Reads take the engine lock shared; every write
/// (event, update, agent run) takes it exclusively.
#[derive(Debug, Default)]
pub struct Gateway {
    engine: RwLock<Engine>,
    sessions: SessionRegistry,
    /// Receipts of submitted events by (token, idempotency key).
    receipts: Mutex<HashMap<(String, String), EventReceipt>>,
}

impl Gateway {
    pub fn new(engine: Engine) -> Self {
        Gateway {
            engine: RwLock::new(engine),
            sessions: SessionRegistry::new(),
            receipts: Mutex::new(HashMap::new()),
        }
    }

    pub fn read<T>(&self, f: impl FnOnce(&Engine) -> T) -> T {
        f(&self.engine.read().expect("engine lock poisoned"))
    }

    fn write<T>(&self, f: impl FnOnce(&mut Engine) -> T) -> T {
        f(&mut self.engine.write().expect("engine lock poisoned"))
    }

    fn session(&self, token: &str) -> Result<Session, GatewayError> {
        Ok(self.sessions.validate(token)?)
    }

    pub fn open_session(&self, profile: &str) -> Result<SessionSummary, GatewayError> {
        let (profile, pages) = self.read(|e| {
            let p = e.profile(profile)?.clone();
            let pages = e.list_pages(&p);
            Ok::<_, GatewayError>((p, pages))
        })?;
        let session = self.sessions.open(profile.clone());
        Ok(SessionSummary {
            token: session.token,
            profile: profile.user_id,
            rank: profile.rank,
            pages,
        })
    }

    pub fn close_session(&self, token: &str) -> Result<(), GatewayError> {
        self.sessions.close(token)?;
        self.write(|e| e.close_session(token));
        Ok(())
    }

    pub fn list_pages(&self, token: &str) -> Result<Vec<String>, GatewayError> {
        let s = self.session(token)?;
        Ok(self.read(|e| e.list_pages(&s.profile)))
    }

    pub fn get_page(&self, token: &str, page: &str) -> Result<RenderedPage, GatewayError> {
        let s = self.session(token)?;
        Ok(self.read(|e| e.render(token, &s.profile, page))?)
    }

    pub fn metadata(&self, token: &str, object: &str) -> Result<MetadataRecord, GatewayError> {
        let s = self.session(token)?;
        Ok(self.read(|e| e.metadata(&s.profile, object))?)
    }

    /// Dispatches one client event. A repeated idempotency key from the
    /// same session returns the first receipt without dispatching again.
    pub fn submit_event(
        &self,
        token: &str,
        name: &str,
        args: &BTreeMap<String, serde_json::Value>,
        idempotency_key: Option<&str>,
    ) -> Result<EventReceipt, GatewayError> {
        self.session(token)?;
        let args = arg_map(args)?;
        let mut receipts = self.receipts.lock().expect("receipt map poisoned");
        let key = idempotency_key.map(|k| (token.to_string(), k.to_string()));
        if let Some(r) = key.as_ref().and_then(|k| receipts.get(k)) {
            return Ok(r.clone());
        }
        let (event, effects) = self.write(|e| e.dispatch(token, name, args));
        let receipt = EventReceipt {
            timestamp: event.timestamp,
            effects,
        };
        if let Some(k) = key {
            receipts.insert(k, receipt.clone());
        }
        Ok(receipt)
    }

    pub fn update(&self, repo: &str, request: &UpdateRequest) -> Result<UpdateReceipt, GatewayError> {
        self.write(|e| {
            e.warehouse().repository(repo).map_err(EngineError::from)?;
            let critical = request.content_critical;
            let change = match &request.change {
                UpdateOp::Insert { id, values } => Change::Insert {
                    id: id.clone(),
                    values: values.clone(),
                },
                UpdateOp::Update { id, values } => Change::Update {
                    id: id.clone(),
                    values: values.clone(),
                },
                UpdateOp::Hook { event, args } => {
                    let effects = e.fire_hook(event, arg_map(args)?, critical)?;
                    let pages = |want: fn(&Effect) -> Option<&String>| -> Vec<String> {
                        effects.iter().filter_map(want).cloned().collect()
                    };
                    return Ok(UpdateReceipt {
                        accepted: true,
                        revision: None,
                        marked: pages(|x| match x {
                            Effect::PageMarked { page } => Some(page),
                            _ => None,
                        }),
                        refreshed: pages(|x| match x {
                            Effect::PageRefreshed { page } => Some(page),
                            _ => None,
                        }),
                        effects,
                    });
                }
            };
            let out = e.mutate(repo, &change, critical)?;
            Ok(UpdateReceipt {
                accepted: true,
                revision: Some(out.receipt.revision),
                marked: out.marks.marked,
                refreshed: out.marks.refreshed,
                effects: Vec::new(),
            })
        })
    }

    pub fn run_agent(&self, tick: u64) -> Vec<String> {
        self.write(|e| e.run_agent(tick))
    }

    pub fn manual_refresh(&self, page: &str) -> Result<(), GatewayError> {
        self.write(|e| e.manual_refresh(page))
            .map(|_| ())
            .map_err(|err| match err {
                EventError::UnknownPage(p) => GatewayError::NotFound(p),
                other => GatewayError::Engine(other.into()),
            })
    }

    pub fn profiles(&self) -> Vec<(String, Rank)> {
        self.read(|e| e.profiles().values().map(|p| (p.user_id.clone(), p.rank)).collect())
    }
}
