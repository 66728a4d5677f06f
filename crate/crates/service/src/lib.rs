//! Auction sessions over the simulation core.
//!
//! A session moves `Announced → Configured → Bidding → Searching →
//! Settled | Void`. Each change is journaled as one JSON line before it is
//! applied in memory; replaying a journal rebuilds the session and re-runs
//! the search to check the stored result.

pub mod error;
pub mod http;
pub mod journal;
pub mod model;
pub mod session;
pub mod store;
pub mod views;

pub use error::{ErrorCode, Result, ServiceError};
pub use journal::{encode_event, parse_journal, replay, replay_text};
pub use model::{Event, EventKind, Phase, SessionKind, SessionSpec};
pub use session::Session;
pub use store::{BidAck, SessionStore};
pub use views::Viewer;

/// Environment variable naming the journal directory used by `serve`.
pub const DATA_DIR_ENV: &str = "QAUCTION_DATA_DIR";
