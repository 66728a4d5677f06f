#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use qauction_service::SessionStore;
use serde_json::{json, Value};

/// Store with a deterministic millisecond counter as its clock.
pub fn memory_store() -> SessionStore {
    let tick = Arc::new(AtomicU64::new(1_700_000_000_000));
    SessionStore::in_memory().with_clock(Arc::new(move || tick.fetch_add(1, Ordering::SeqCst)))
}

pub fn hp_spec() -> Value {
    json!({"kind": "hp", "title": "two-item demo", "metadata": {"currency": "EUR"}})
}

/// The pinned 2-bidder instance: two items, 2+2 bit registers, tick 1.
pub fn pinned_config() -> Value {
    json!({
        "bidders": ["A", "B"],
        "register": {"p_item": 2, "p_price": 2},
        "tick": 1.0,
        "search": {"steps": 200, "dt": 0.5, "runs": 200}
    })
}

pub fn half() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

pub fn pinned_bid_a() -> Value {
    json!({"terms": [
        {"bundle": "01", "level": 3, "amp": [half(), 0.0]},
        {"bundle": "10", "level": 1, "amp": [half(), 0.0]}
    ]})
}

pub fn pinned_bid_b() -> Value {
    json!({"terms": [
        {"bundle": "10", "level": 2, "amp": [half(), 0.0]},
        {"bundle": "01", "level": 1, "amp": [half(), 0.0]}
    ]})
}

pub fn ps_config() -> Value {
    json!({"traders": ["alice", "bob", "carol"], "grid": {"qmin": -8, "qmax": 8, "n": 1024}})
}

pub fn gg_config() -> Value {
    json!({"n_max": 12, "rounds": 64, "tau": 1.0, "beta0_re": 0.5, "beta1_re": 0.4, "lambda": 0.05, "reset_each_round": true})
}

/// Every string and number leaf in a JSON document, with its key path.
pub fn leaves(v: &Value, path: &str, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| leaves(x, &format!("{path}/{k}"), out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| leaves(x, &format!("{path}/{i}"), out)),
        other => out.push((path.to_string(), other.clone())),
    }
}
