//! Redacted session documents.
//!
//! * bidders: phase, public auction spec, their own bid and own outcome;
//! * auctioneer: everything, except that bid contents stay hidden until the
//!   session is settled (before that, only the bid count);
//! * public: phase and, once settled, the revenue.

use serde_json::{json, Map, Value};

use crate::error::{ErrorCode, Result, ServiceError};
use crate::model::{Event, EventKind, ModelConfig, Phase};
use crate::session::{hp_allocation, hp_instance, Session, RESERVED_VIEWERS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Viewer {
    Public,
    Auctioneer,
    Bidder(String),
}

impl Viewer {
    pub fn parse(name: &str) -> Self {
        match name {
            "public" | "" => Viewer::Public,
            "auctioneer" => Viewer::Auctioneer,
            other => Viewer::Bidder(other.to_string()),
        }
    }
}

fn settled_revenue(s: &Session) -> Option<Value> {
    if s.phase != Phase::Settled {
        return None;
    }
    s.result.as_ref()?.get("settlement")?.get("settled_revenue").cloned()
}

/// Auction parameters every participant may see; no roster.
fn public_config(config: &ModelConfig) -> Value {
    match config {
        ModelConfig::Hp(c) => json!({
            "register": c.register,
            "items": c.items.unwrap_or(c.register.p_item),
            "tick": c.tick,
            "penalty": hp_instance(c).map(|i| i.penalty).ok(),
            "search": c.search,
            "bidder_count": c.bidders.len(),
        }),
        ModelConfig::Ps(c) => json!({"grid": c.grid, "risk": c.risk.unwrap_or_default(), "trader_count": c.traders.len()}),
        ModelConfig::Gg(c) => serde_json::to_value(c).expect("config serializes"),
    }
}

fn own_outcome(s: &Session, bidder: &str) -> Option<Value> {
    if !s.phase.is_terminal() {
        return None;
    }
    let result = s.result.as_ref()?;
    match s.config.as_ref()? {
        ModelConfig::Hp(c) => Some(hp_allocation(c, result, bidder).unwrap_or(json!({"won": false}))),
        ModelConfig::Ps(_) => {
            let outcome = &result.get("report")?;
            let flow = outcome.get("flows").and_then(|f| f.get(bidder)).cloned();
            let coordinate = outcome.get("collapsed").and_then(|c| c.get(bidder)).cloned();
            Some(json!({
                "traded": flow.is_some(),
                "flow": flow,
                "price": if flow.is_some() { outcome.get("price").cloned() } else { None },
                "sampled_coordinate": coordinate,
            }))
        }
        ModelConfig::Gg(_) => None,
    }
}

fn insert_opt(map: &mut Map<String, Value>, key: &str, value: Option<Value>) {
    map.insert(key.to_string(), value.unwrap_or(Value::Null));
}

pub fn view(s: &Session, viewer: &Viewer) -> Result<Value> {
    let mut doc = Map::new();
    doc.insert("id".into(), json!(s.id));
    doc.insert("kind".into(), json!(s.spec.kind));
    doc.insert("phase".into(), json!(s.phase));
    match viewer {
        Viewer::Public => {
            doc.insert("title".into(), json!(s.spec.title));
            insert_opt(&mut doc, "settled_revenue", settled_revenue(s));
        }
        Viewer::Bidder(id) => {
            let registered = s.config.as_ref().is_some_and(|c| c.roster().contains(id));
            if !registered || RESERVED_VIEWERS.contains(&id.as_str()) {
                return Err(ServiceError::new(ErrorCode::UnknownBidder, format!("{id:?} is not a registered bidder")));
            }
            doc.insert("title".into(), json!(s.spec.title));
            doc.insert("metadata".into(), Value::Object(s.spec.metadata.clone()));
            insert_opt(&mut doc, "config", s.config.as_ref().map(public_config));
            insert_opt(&mut doc, "own_bid", s.bids.get(id).map(|b| serde_json::to_value(b).expect("bid serializes")));
            insert_opt(&mut doc, "own_outcome", own_outcome(s, id));
            insert_opt(&mut doc, "settled_revenue", settled_revenue(s));
        }
        Viewer::Auctioneer => {
            doc.insert("title".into(), json!(s.spec.title));
            doc.insert("metadata".into(), Value::Object(s.spec.metadata.clone()));
            insert_opt(&mut doc, "config", s.config.as_ref().map(|c| serde_json::to_value(c).expect("config serializes")));
            doc.insert("bid_count".into(), json!(s.bids.len()));
            doc.insert("submissions".into(), json!(s.submissions));
            let bids = (s.phase == Phase::Settled).then(|| serde_json::to_value(&s.bids).expect("bids serialize"));
            insert_opt(&mut doc, "bids", bids);
            insert_opt(&mut doc, "search_seed", s.search_seed.map(|v| json!(v)));
            insert_opt(&mut doc, "result", auctioneer_result(s));
            insert_opt(&mut doc, "settled_revenue", settled_revenue(s));
        }
    }
    Ok(Value::Object(doc))
}

/// A voided search keeps per-run statistics hidden: they would reveal bid terms.
fn auctioneer_result(s: &Session) -> Option<Value> {
    let mut result = s.result.clone()?;
    if s.phase == Phase::Void {
        if let Some(obj) = result.as_object_mut() {
            obj.remove("stats");
        }
    }
    Some(result)
}

/// The journal as the auctioneer may see it: bid payloads are withheld until
/// settlement.
pub fn auctioneer_events(s: &Session, events: &[Event]) -> Vec<Event> {
    events
        .iter()
        .map(|e| {
            if e.kind == EventKind::BidSubmitted && s.phase != Phase::Settled {
                Event { payload: json!({"redacted": true}), ..e.clone() }
            } else {
                e.clone()
            }
        })
        .collect()
}
