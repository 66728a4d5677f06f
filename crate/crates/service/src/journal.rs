//! JSON-lines journal: one [`Event`] per LF-terminated line.

use crate::error::{Result, ServiceError};
use crate::model::{Event, EventKind, Phase};
use crate::session::Session;

/// Parsed journal text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedJournal {
    pub events: Vec<Event>,
    /// Bytes covered by complete lines; anything after is a torn tail.
    pub complete_len: usize,
    pub torn_tail: bool,
}

/// Splits journal text into events. An unterminated final line is a torn
/// write and is dropped; any unparsable complete line is an integrity error.
pub fn parse_journal(text: &str) -> Result<ParsedJournal> {
    let mut events = Vec::new();
    let mut offset = 0;
    while let Some(end) = text[offset..].find('\n') {
        let line = &text[offset..offset + end];
        let event: Event = serde_json::from_str(line)
            .map_err(|e| ServiceError::integrity(format!("corrupt journal line {}: {e}", events.len() + 1)))?;
        events.push(event);
        offset += end + 1;
    }
    Ok(ParsedJournal { events, complete_len: offset, torn_tail: offset < text.len() })
}

pub fn encode_event(event: &Event) -> String {
    let mut line = serde_json::to_string(event).expect("events serialize");
    line.push('\n');
    line
}

/// Rebuilds a session from its events.
///
/// Seq numbers must be gapless from 1, and every journaled search result must
/// be reproduced byte-for-byte from the preceding state and stored seed.
pub fn replay(events: &[Event]) -> Result<Session> {
    let first = events.first().ok_or_else(|| ServiceError::integrity("empty journal"))?;
    let mut session = Session::from_created(first)?;
    for event in &events[1..] {
        if matches!(event.kind, EventKind::Settled | EventKind::Voided) && session.phase == Phase::Searching {
            let (kind, doc) = session.compute_result()?;
            let (want, got) = (serde_json::to_string(&doc)?, serde_json::to_string(&event.payload)?);
            if kind != event.kind || want != got {
                return Err(ServiceError::integrity(format!("search result at seq {} does not reproduce", event.seq)));
            }
        }
        session.apply(event).map_err(|e| ServiceError::integrity(format!("event {}: {}", event.seq, e.message)))?;
    }
    Ok(session)
}

/// Parses and replays journal text, ignoring a torn tail.
pub fn replay_text(text: &str) -> Result<Session> {
    replay(&parse_journal(text)?.events)
}
