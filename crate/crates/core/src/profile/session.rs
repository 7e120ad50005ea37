use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::UserProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub profile: UserProfile,
    /// Logical open counter, not wall-clock time.
    pub opened_at: u64,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown session token")]
    UnknownToken,
    #[error("session is closed")]
    SessionClosed,
    #[error("session already closed")]
    AlreadyClosed,
}

/// Live and closed sessions. Closed sessions are kept so that their
/// tokens keep failing with `SessionClosed` rather than looking unknown.
#[derive(Debug, Default)]
pub struct SessionRegistry {
    inner: Mutex<Registry>,
}

#[derive(Debug, Default)]
struct Registry {
    sessions: HashMap<String, Session>,
    opened: u64,
}

/// 128 bits from the thread-local CSPRNG, hex encoded.
fn fresh_token() -> String {
    let bytes: [u8; 16] = rand::rng().random();
    hex::encode(bytes)
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&self, profile: UserProfile) -> Session {
        let mut reg = self.inner.lock().expect("session registry poisoned");
        let mut token = fresh_token();
        while reg.sessions.contains_key(&token) {
            token = fresh_token();
        }
        reg.opened += 1;
        let session = Session {
            token: token.clone(),
            profile,
            opened_at: reg.opened,
            state: SessionState::Open,
        };
        reg.sessions.insert(token, session.clone());
        session
    }

    pub fn close(&self, token: &str) -> Result<(), SessionError> {
        let mut reg = self.inner.lock().expect("session registry poisoned");
        let session = reg.sessions.get_mut(token).ok_or(SessionError::UnknownToken)?;
        if session.state == SessionState::Closed {
            return Err(SessionError::AlreadyClosed);
        }
        session.state = SessionState::Closed;
        Ok(())
    }

    /// Returns a snapshot of the session if and only if it is open.
    pub fn validate(&self, token: &str) -> Result<Session, SessionError> {
        let reg = self.inner.lock().expect("session registry poisoned");
        match reg.sessions.get(token) {
            None => Err(SessionError::UnknownToken),
            Some(s) if s.state == SessionState::Closed => Err(SessionError::SessionClosed),
            Some(s) => Ok(s.clone()),
        }
    }

    pub fn open_count(&self) -> usize {
        let reg = self.inner.lock().expect("session registry poisoned");
        reg.sessions
            .values()
            .filter(|s| s.state == SessionState::Open)
            .count()
    }
}
