//! The session phase machine. Every change is an [`Event`]; a session is the
//! fold of its events, so live updates and replay share [`Session::apply`].

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use qauction_core::hp::{
    outcome_of_index, run_auction, AuctionInstance, BidSuperposition, BidTerm, SearchConfig,
};
use qauction_core::ps::{market_round, TraderSpec, TraderStrategy};
use qauction_core::Complex64;

use crate::error::{ErrorCode, Result, ServiceError};
use crate::model::*;

/// Viewer names that cannot be used as bidder ids.
pub const RESERVED_VIEWERS: [&str; 2] = ["public", "auctioneer"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    pub id: String,
    pub spec: SessionSpec,
    pub phase: Phase,
    pub config: Option<ModelConfig>,
    /// Latest bid per bidder.
    pub bids: BTreeMap<String, Bid>,
    /// Number of bid submissions, replacements included.
    pub submissions: usize,
    pub search_seed: Option<u64>,
    pub result: Option<Value>,
    pub last_seq: u64,
    pub created_at: u64,
    pub updated_at: u64,
}

fn wrong_phase(op: &str, phase: Phase) -> ServiceError {
    ServiceError::new(ErrorCode::WrongPhase, format!("{op} is not allowed in phase {phase:?}"))
}

impl Session {
    /// Builds a session from its `created` event.
    pub fn from_created(event: &Event) -> Result<Self> {
        if event.kind != EventKind::Created || event.seq != 1 {
            return Err(ServiceError::integrity("journal must start with a created event at seq 1"));
        }
        let payload: CreatedPayload = serde_json::from_value(event.payload.clone())
            .map_err(|e| ServiceError::integrity(format!("bad created payload: {e}")))?;
        Ok(Self {
            id: payload.id,
            spec: payload.spec,
            phase: Phase::Announced,
            config: None,
            bids: BTreeMap::new(),
            submissions: 0,
            search_seed: None,
            result: None,
            last_seq: 1,
            created_at: event.timestamp,
            updated_at: event.timestamp,
        })
    }

    pub fn kind(&self) -> SessionKind {
        self.spec.kind
    }

    fn transition(&mut self, next: Phase) {
        debug_assert!(self.phase.can_move_to(next), "{:?} -> {next:?}", self.phase);
        self.phase = next;
    }

    /// Applies the next event. On error the session is left unchanged.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        if event.seq != self.last_seq + 1 {
            return Err(ServiceError::integrity(format!("expected seq {}, found {}", self.last_seq + 1, event.seq)));
        }
        let mut next = self.clone();
        next.apply_unchecked(event)?;
        next.last_seq = event.seq;
        next.updated_at = event.timestamp;
        *self = next;
        Ok(())
    }

    fn apply_unchecked(&mut self, event: &Event) -> Result<()> {
        match event.kind {
            EventKind::Created => Err(ServiceError::integrity("duplicate created event")),
            EventKind::Configured => {
                if self.phase != Phase::Announced {
                    return Err(wrong_phase("configure", self.phase));
                }
                let config = ModelConfig::parse(self.kind(), event.payload.clone())?;
                validate_config(&config)?;
                self.config = Some(config);
                self.transition(Phase::Configured);
                self.transition(Phase::Bidding);
                Ok(())
            }
            EventKind::BidSubmitted => {
                if self.phase != Phase::Bidding {
                    return Err(wrong_phase("bidding", self.phase));
                }
                let (bidder_id, bid) = parse_bid_payload(self.kind(), &event.payload)?;
                self.validate_bid(&bidder_id, &bid)?;
                self.bids.insert(bidder_id, bid);
                self.submissions += 1;
                Ok(())
            }
            EventKind::SearchStarted => {
                if self.phase != Phase::Bidding {
                    return Err(wrong_phase("search", self.phase));
                }
                if self.bids.is_empty() && self.kind() != SessionKind::Gg {
                    return Err(ServiceError::new(ErrorCode::NoBids, "search needs at least one bid"));
                }
                let p: SearchStartedPayload = serde_json::from_value(event.payload.clone())?;
                self.search_seed = Some(p.seed);
                self.transition(Phase::Searching);
                Ok(())
            }
            EventKind::Settled | EventKind::Voided => {
                if self.phase != Phase::Searching {
                    return Err(wrong_phase("settlement", self.phase));
                }
                self.result = Some(event.payload.clone());
                self.transition(if event.kind == EventKind::Settled { Phase::Settled } else { Phase::Void });
                Ok(())
            }
        }
    }

    fn config(&self) -> Result<&ModelConfig> {
        self.config.as_ref().ok_or_else(|| wrong_phase("this operation", self.phase))
    }

    fn validate_bid(&self, bidder_id: &str, bid: &Bid) -> Result<()> {
        let config = self.config()?;
        if !config.roster().iter().any(|b| b == bidder_id) {
            return Err(ServiceError::new(ErrorCode::UnknownBidder, format!("{bidder_id:?} is not a registered bidder")));
        }
        match (config, bid) {
            (ModelConfig::Hp(c), Bid::Hp(b)) => hp_bid(c, bidder_id, b).map(|_| ()),
            (ModelConfig::Ps(c), Bid::Ps(b)) => ps_trader(c, bidder_id, b).map(|_| ()),
            _ => Err(ServiceError::invalid("bid does not match the session kind")),
        }
    }

    /// Deterministic search result for a session in `Searching`: the event
    /// kind (`settled` or `voided`) and the result document.
    pub fn compute_result(&self) -> Result<(EventKind, Value)> {
        let seed = self.search_seed.ok_or_else(|| wrong_phase("result computation", self.phase))?;
        match self.config()? {
            ModelConfig::Hp(c) => {
                let instance = hp_instance(c)?;
                let bids = c
                    .bidders
                    .iter()
                    .map(|id| match self.bids.get(id) {
                        Some(Bid::Hp(b)) => hp_bid(c, id, b),
                        _ => abstain(id, c),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let cfg = SearchConfig { steps: c.search.steps, dt: c.search.dt, seed, runs: c.search.runs };
                let stats = run_auction(&bids, &instance, &cfg)?;
                let binding = stats.best_feasible(&instance);
                let (kind, settlement) = match &binding {
                    Some((_, outcome)) => {
                        let winners: Vec<Value> = outcome
                            .winners()
                            .map(|(i, a)| {
                                json!({
                                    "bidder": c.bidders[i],
                                    "bundle": a.bundle,
                                    "level": a.price_level,
                                    "price": c.tick * a.price_level as f64,
                                })
                            })
                            .collect();
                        (EventKind::Settled, json!({"settled_revenue": outcome.revenue, "winners": winners}))
                    }
                    None => (EventKind::Voided, json!({"settled_revenue": null, "winners": []})),
                };
                let binding = binding.map(|(index, outcome)| json!({"index": index, "outcome": outcome}));
                Ok((kind, json!({"kind": "hp", "seed": seed, "binding": binding, "stats": stats, "settlement": settlement})))
            }
            ModelConfig::Ps(c) => {
                let traders = c
                    .traders
                    .iter()
                    .filter_map(|id| match self.bids.get(id) {
                        Some(Bid::Ps(b)) => Some(ps_trader(c, id, b)),
                        _ => None,
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (report, _) = market_round(&traders, &c.risk.unwrap_or_default(), seed)?;
                let revenue: f64 = report.outcome.trades.iter().map(|t| t.price).sum();
                let settlement = json!({"settled_revenue": revenue, "winners": report.outcome.trades});
                Ok((EventKind::Settled, json!({"kind": "ps", "seed": seed, "report": report, "settlement": settlement})))
            }
            ModelConfig::Gg(c) => {
                let mut file = c.clone();
                file.seed = seed;
                let series = qauction_core::gg::run_market(&file.into_config()?)?;
                let settlement = json!({"settled_revenue": null, "winners": []});
                Ok((EventKind::Settled, json!({"kind": "gg", "seed": seed, "series": series, "settlement": settlement})))
            }
        }
    }
}

pub(crate) fn parse_bid_payload(kind: SessionKind, payload: &Value) -> Result<(String, Bid)> {
    let bidder_id = payload
        .get("bidder_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ServiceError::invalid("bid payload lacks bidder_id"))?
        .to_string();
    let bid = payload.get("bid").cloned().ok_or_else(|| ServiceError::invalid("bid payload lacks bid"))?;
    Ok((bidder_id, Bid::parse(kind, bid)?))
}

fn validate_config(config: &ModelConfig) -> Result<()> {
    let roster = config.roster();
    let mut seen = std::collections::BTreeSet::new();
    for id in roster {
        if id.is_empty() || RESERVED_VIEWERS.contains(&id.as_str()) {
            return Err(ServiceError::invalid(format!("{id:?} cannot be used as a bidder id")));
        }
        if !seen.insert(id) {
            return Err(ServiceError::invalid(format!("duplicate bidder id {id:?}")));
        }
    }
    match config {
        ModelConfig::Hp(c) => {
            if roster.is_empty() {
                return Err(ServiceError::invalid("an hp auction needs at least one bidder"));
            }
            let instance = hp_instance(c)?;
            instance.check_simulable()?;
            SearchConfig { steps: c.search.steps, dt: c.search.dt, seed: 0, runs: c.search.runs }.validate()?;
        }
        ModelConfig::Ps(c) => {
            if roster.is_empty() {
                return Err(ServiceError::invalid("a ps market needs at least one trader"));
            }
            c.grid.validate()?;
            if let Some(rp) = c.risk {
                qauction_core::ps::RiskParams::new(rp.m, rp.theta)?;
            }
        }
        ModelConfig::Gg(c) => {
            c.clone().into_config()?;
        }
    }
    Ok(())
}

pub(crate) fn hp_instance(c: &HpConfig) -> Result<AuctionInstance> {
    Ok(AuctionInstance::new(c.items.unwrap_or(c.register.p_item), c.register, c.bidders.len(), c.tick, c.penalty)?)
}

fn hp_bid(c: &HpConfig, bidder_id: &str, bid: &HpBid) -> Result<BidSuperposition> {
    let b = bid.spec(bidder_id).build(c.register)?;
    let items = c.items.unwrap_or(c.register.p_item);
    if let Some(t) = b.terms().iter().find(|t| t.bundle >> items != 0) {
        return Err(ServiceError::invalid(format!("bundle {:#b} names items beyond the {items} auctioned", t.bundle)));
    }
    Ok(b)
}

/// The all-zeros register: a registered bidder who did not bid.
fn abstain(bidder_id: &str, c: &HpConfig) -> Result<BidSuperposition> {
    let term = BidTerm { bundle: 0, price_level: 0, amplitude: Complex64::new(1.0, 0.0) };
    Ok(BidSuperposition::new(bidder_id, c.register, vec![term])?)
}

fn ps_trader(c: &PsConfig, id: &str, bid: &PsBid) -> Result<TraderStrategy> {
    let spec = TraderSpec { id: id.to_string(), side: bid.side, shape: bid.shape.clone() };
    Ok(spec.build(c.grid)?)
}

/// The bidder's own allocation in an hp binding outcome, if any.
pub(crate) fn hp_allocation(c: &HpConfig, result: &Value, bidder: &str) -> Option<Value> {
    let position = c.bidders.iter().position(|b| b == bidder)?;
    let index = result.get("binding")?.get("index")?.as_u64()? as usize;
    let outcome = outcome_of_index(index, &hp_instance(c).ok()?);
    Some(match outcome.allocations[position] {
        Some(a) => json!({"won": true, "bundle": a.bundle, "level": a.price_level, "price": c.tick * a.price_level as f64}),
        None => json!({"won": false}),
    })
}
