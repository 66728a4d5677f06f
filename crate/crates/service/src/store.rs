//! Concurrent session registry backed by per-session journals.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{ErrorCode, Result, ServiceError};
use crate::journal::{encode_event, parse_journal, replay};
use crate::model::*;
use crate::session::{parse_bid_payload, Session};
use crate::views::{auctioneer_events, view, Viewer};

/// Milliseconds since the Unix epoch.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0))
}

struct Entry {
    session: Session,
    events: Vec<Event>,
    file: Option<File>,
}

impl Entry {
    /// Appends events to the journal, then commits the new state. If the
    /// write fails nothing changes in memory.
    fn commit(&mut self, next: Session, new_events: Vec<Event>) -> Result<()> {
        if let Some(file) = self.file.as_mut() {
            let text: String = new_events.iter().map(encode_event).collect();
            file.write_all(text.as_bytes())?;
            file.sync_data()?;
        }
        self.events.extend(new_events);
        self.session = next;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidAck {
    pub session_id: String,
    pub bidder_id: String,
    pub seq: u64,
    /// True when this submission replaced an earlier bid.
    pub replaced: bool,
}

pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<RwLock<Entry>>>>,
    clock: Clock,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self { dir: None, sessions: RwLock::default(), clock: system_clock() }
    }

    /// Opens (creating if needed) a journal directory and replays every
    /// `*.jsonl` session in it. Torn tails are truncated away and searches
    /// interrupted between `search_started` and settlement are completed.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let store = Self { dir: Some(dir.clone()), sessions: RwLock::default(), clock: system_clock() };
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path)?;
            let parsed = parse_journal(&text)
                .map_err(|e| ServiceError::integrity(format!("{}: {}", path.display(), e.message)))?;
            let session = replay(&parsed.events)
                .map_err(|e| ServiceError::integrity(format!("{}: {}", path.display(), e.message)))?;
            let file = OpenOptions::new().write(true).open(&path)?;
            if parsed.torn_tail {
                file.set_len(parsed.complete_len as u64)?;
            }
            let file = OpenOptions::new().append(true).open(&path)?;
            let id = session.id.clone();
            let entry = Entry { session, events: parsed.events, file: Some(file) };
            store.sessions.write().expect("registry lock").insert(id.clone(), Arc::new(RwLock::new(entry)));
            if store.get_session(&id)?.phase == Phase::Searching {
                store.finish_search(&id)?;
            }
        }
        Ok(store)
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn entry(&self, id: &str) -> Result<Arc<RwLock<Entry>>> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::new(ErrorCode::NotFound, format!("no session {id:?}")))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().expect("registry lock").keys().cloned().collect()
    }

    fn event(&self, session: &Session, kind: EventKind, payload: Value) -> Event {
        Event { seq: session.last_seq + 1, timestamp: (self.clock)(), kind, payload }
    }

    pub fn create_session(&self, spec: Value) -> Result<Session> {
        let spec: SessionSpec = serde_json::from_value(spec)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created = Event {
            seq: 1,
            timestamp: (self.clock)(),
            kind: EventKind::Created,
            payload: serde_json::to_value(CreatedPayload { id: id.clone(), spec })?,
        };
        let session = Session::from_created(&created)?;
        let file = match &self.dir {
            Some(dir) => {
                let mut f = OpenOptions::new().create_new(true).append(true).open(dir.join(format!("{id}.jsonl")))?;
                f.write_all(encode_event(&created).as_bytes())?;
                f.sync_data()?;
                Some(f)
            }
            None => None,
        };
        let entry = Entry { session: session.clone(), events: vec![created], file };
        self.sessions.write().expect("registry lock").insert(id, Arc::new(RwLock::new(entry)));
        Ok(session)
    }

    /// Applies one event built from the current state; serialized per session.
    fn append(&self, id: &str, kind: EventKind, payload: Value) -> Result<Session> {
        let entry = self.entry(id)?;
        let mut guard = entry.write().expect("session lock");
        let event = self.event(&guard.session, kind, payload);
        let mut next = guard.session.clone();
        next.apply(&event)?;
        guard.commit(next.clone(), vec![event])?;
        Ok(next)
    }

    pub fn configure(&self, id: &str, config: Value) -> Result<Session> {
        self.append(id, EventKind::Configured, config)
    }

    pub fn submit_bid(&self, id: &str, bidder_id: &str, bid: Value) -> Result<BidAck> {
        let entry = self.entry(id)?;
        let mut guard = entry.write().expect("session lock");
        let payload = serde_json::json!({"bidder_id": bidder_id, "bid": bid});
        // normalise the stored payload to the typed form
        let (_, typed) = parse_bid_payload(guard.session.kind(), &payload)?;
        let payload = serde_json::to_value(BidPayload { bidder_id: bidder_id.to_string(), bid: typed })?;
        let event = self.event(&guard.session, EventKind::BidSubmitted, payload);
        let replaced = guard.session.bids.contains_key(bidder_id);
        let mut next = guard.session.clone();
        next.apply(&event)?;
        let seq = event.seq;
        guard.commit(next, vec![event])?;
        Ok(BidAck { session_id: id.to_string(), bidder_id: bidder_id.to_string(), seq, replaced })
    }

    /// Starts the search with `seed` and settles or voids the session.
    pub fn run_search(&self, id: &str, seed: u64) -> Result<Session> {
        let entry = self.entry(id)?;
        let mut guard = entry.write().expect("session lock");
        let started = self.event(&guard.session, EventKind::SearchStarted, serde_json::json!(SearchStartedPayload { seed }));
        let mut next = guard.session.clone();
        next.apply(&started)?;
        let (kind, doc) = next.compute_result()?;
        let finished = self.event(&next, kind, doc);
        next.apply(&finished)?;
        guard.commit(next.clone(), vec![started, finished])?;
        Ok(next)
    }

    /// Completes a search whose start was journaled but whose result was not.
    fn finish_search(&self, id: &str) -> Result<Session> {
        let entry = self.entry(id)?;
        let mut guard = entry.write().expect("session lock");
        let mut next = guard.session.clone();
        let (kind, doc) = next.compute_result()?;
        let finished = self.event(&next, kind, doc);
        next.apply(&finished)?;
        guard.commit(next.clone(), vec![finished])?;
        Ok(next)
    }

    pub fn get_session(&self, id: &str) -> Result<Session> {
        Ok(self.entry(id)?.read().expect("session lock").session.clone())
    }

    pub fn view(&self, id: &str, viewer: &Viewer) -> Result<Value> {
        view(&self.entry(id)?.read().expect("session lock").session, viewer)
    }

    /// Journal events; only the auctioneer may read them.
    pub fn events(&self, id: &str, viewer: &Viewer) -> Result<Vec<Event>> {
        let entry = self.entry(id)?;
        if *viewer != Viewer::Auctioneer {
            return Err(ServiceError::new(ErrorCode::Forbidden, "only the auctioneer may read the journal"));
        }
        let guard = entry.read().expect("session lock");
        Ok(auctioneer_events(&guard.session, &guard.events))
    }

    /// The full, unredacted journal (for audit and replay tooling).
    pub fn journal(&self, id: &str) -> Result<Vec<Event>> {
        Ok(self.entry(id)?.read().expect("session lock").events.clone())
    }
}
