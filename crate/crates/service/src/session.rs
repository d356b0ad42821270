//! Pathway sessions: one search tree per id, expired after an idle
//! timeout. Expired ids are remembered so late requests get 410, not 404.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;

use rmech_core::pathway::{PathwayTree, Target};
use rmech_core::predictor::Pipeline;

use crate::error::ApiError;

/// Expired ids kept for 410 answers before they fall back to 404.
const TOMBSTONES: usize = 10_000;

pub struct SessionTree {
    pub tree: PathwayTree,
    pub targets: Vec<Target>,
}

pub struct Session {
    pub id: String,
    /// Unix seconds.
    pub created: u64,
    pub pipeline: Arc<dyn Pipeline>,
    /// Held for the whole of an expansion, so requests to one session run
    /// one at a time.
    pub state: Mutex<SessionTree>,
    last_used: Mutex<Instant>,
}

impl Session {
    pub fn new(pipeline: Arc<dyn Pipeline>, tree: PathwayTree, targets: Vec<Target>) -> Self {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Session {
            id: uuid::Uuid::new_v4().to_string(),
            created,
            pipeline,
            state: Mutex::new(SessionTree { tree, targets }),
            last_used: Mutex::new(Instant::now()),
        }
    }

    pub fn touch(&self, now: Instant) {
        *self.last_used.lock().unwrap_or_else(|e| e.into_inner()) = now;
    }

    fn idle_since(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_used.lock().unwrap_or_else(|e| e.into_inner()))
    }
}

#[derive(Default)]
struct Inner {
    live: HashMap<String, Arc<Session>>,
    dead: HashSet<String>,
    dead_order: VecDeque<String>,
}

pub struct SessionStore {
    pub idle_timeout: Duration,
    pub max_sessions: usize,
    inner: Mutex<Inner>,
}

impl SessionStore {
    pub fn new(idle_timeout: Duration, max_sessions: usize) -> Self {
        SessionStore { idle_timeout, max_sessions, inner: Mutex::new(Inner::default()) }
    }

    fn sweep(&self, inner: &mut Inner, now: Instant) {
        let expired: Vec<String> = inner
            .live
            .iter()
            .filter(|(_, s)| s.idle_since(now) > self.idle_timeout)
            .map(|(k, _)| k.clone())
            .collect();
        for id in expired {
            inner.live.remove(&id);
            tracing::debug!(session = %id, "session expired");
            inner.dead.insert(id.clone());
            inner.dead_order.push_back(id);
        }
        while inner.dead_order.len() > TOMBSTONES {
            if let Some(old) = inner.dead_order.pop_front() {
                inner.dead.remove(&old);
            }
        }
    }

    pub fn insert(&self, session: Session) -> Result<Arc<Session>, ApiError> {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        self.sweep(&mut inner, Instant::now());
        if inner.live.len() >= self.max_sessions {
            return Err(ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "session_limit",
                format!("{} live sessions; retry after one expires", inner.live.len()),
            ));
        }
        let s = Arc::new(session);
        inner.live.insert(s.id.clone(), s.clone());
        Ok(s)
    }

    /// The live session, refreshed; 410 for an expired id, 404 otherwise.
    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let now = Instant::now();
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        self.sweep(&mut inner, now);
        if let Some(s) = inner.live.get(id) {
            s.touch(now);
            return Ok(s.clone());
        }
        if inner.dead.contains(id) {
            return Err(ApiError::new(StatusCode::GONE, "session_expired", format!("session {id} expired")));
        }
        Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    pub fn live(&self) -> usize {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        self.sweep(&mut inner, Instant::now());
        inner.live.len()
    }
}
