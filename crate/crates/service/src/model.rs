//! Wire and journal types.

use serde::{Deserialize, Serialize};

use qauction_core::gg::GGConfigFile;
use qauction_core::hp::{BidSpec, BidderRegister, TermSpec};
use qauction_core::ps::{LogPriceGrid, RiskParams, Side, StrategyShape};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Announced,
    Configured,
    Bidding,
    Searching,
    Settled,
    Void,
}

impl Phase {
    /// Whether `self → next` is a declared transition.
    pub fn can_move_to(self, next: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, next),
            (Announced, Configured) | (Configured, Bidding) | (Bidding, Searching) | (Searching, Settled) | (Searching, Void)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Settled | Phase::Void)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Hp,
    Ps,
    Gg,
}

/// Body of `create_session`: the model kind plus opaque auction metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub kind: SessionKind,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSchedule {
    pub steps: usize,
    pub dt: f64,
    #[serde(default = "one")]
    pub runs: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpConfig {
    pub bidders: Vec<String>,
    pub register: BidderRegister,
    #[serde(default)]
    pub items: Option<u32>,
    pub tick: f64,
    #[serde(default)]
    pub penalty: Option<f64>,
    pub search: SearchSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsConfig {
    pub traders: Vec<String>,
    #[serde(default)]
    pub grid: LogPriceGrid,
    #[serde(default)]
    pub risk: Option<RiskParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Hp(HpConfig),
    Ps(PsConfig),
    Gg(GGConfigFile),
}

impl ModelConfig {
    /// Parses a configuration body for a session of the given kind.
    pub fn parse(kind: SessionKind, body: serde_json::Value) -> Result<Self> {
        Ok(match kind {
            SessionKind::Hp => ModelConfig::Hp(serde_json::from_value(body)?),
            SessionKind::Ps => ModelConfig::Ps(serde_json::from_value(body)?),
            SessionKind::Gg => ModelConfig::Gg(serde_json::from_value(body)?),
        })
    }

    /// Participants allowed to bid.
    pub fn roster(&self) -> &[String] {
        match self {
            ModelConfig::Hp(c) => &c.bidders,
            ModelConfig::Ps(c) => &c.traders,
            ModelConfig::Gg(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpBid {
    pub terms: Vec<TermSpec>,
}

impl HpBid {
    pub fn spec(&self, bidder_id: &str) -> BidSpec {
        BidSpec { id: bidder_id.to_string(), terms: self.terms.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsBid {
    pub side: Side,
    #[serde(flatten)]
    pub shape: StrategyShape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Bid {
    Hp(HpBid),
    Ps(PsBid),
}

impl Bid {
    pub fn parse(kind: SessionKind, body: serde_json::Value) -> Result<Self> {
        match kind {
            SessionKind::Hp => Ok(Bid::Hp(serde_json::from_value(body)?)),
            SessionKind::Ps => Ok(Bid::Ps(serde_json::from_value(body)?)),
            SessionKind::Gg => Err(ServiceError::invalid("gg sessions take no bids")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Configured,
    BidSubmitted,
    SearchStarted,
    Settled,
    Voided,
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedPayload {
    pub id: String,
    pub spec: SessionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidPayload {
    pub bidder_id: String,
    pub bid: Bid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStartedPayload {
    pub seed: u64,
}
