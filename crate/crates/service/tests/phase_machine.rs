mod common;

use common::*;
use proptest::prelude::*;
use qauction_service::{replay, ErrorCode, Phase, SessionStore, Viewer};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
enum Op {
    Configure(bool),
    Bid { bidder: usize, variant: usize },
    Search(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        any::<bool>().prop_map(Op::Configure),
        (0..4usize, 0..4usize).prop_map(|(bidder, variant)| Op::Bid { bidder, variant }),
        (0..1000u64).prop_map(Op::Search),
    ]
}

fn quick_config(valid: bool) -> Value {
    let mut c = pinned_config();
    c["search"] = json!({"steps": 8, "dt": 0.5, "runs": 4});
    if !valid {
        c["penalty"] = json!(1.0);
    }
    c
}

fn bid(variant: usize) -> Value {
    match variant {
        0 => pinned_bid_a(),
        1 => pinned_bid_b(),
        2 => json!({"terms": [{"bundle": "11", "level": 1, "amp": [0.0, -1.0]}]}),
        _ => json!({"terms": [{"bundle": "11", "level": 9, "amp": [1.0, 0.0]}]}),
    }
}

/// True when `to` is `from` or follows it through legal transitions.
fn reachable(from: Phase, to: Phase) -> bool {
    use Phase::*;
    from == to
        || [Announced, Configured, Bidding, Searching, Settled, Void]
            .into_iter()
            .any(|mid| from.can_move_to(mid) && reachable(mid, to))
}

const NAMES: [&str; 4] = ["A", "B", "C", "auctioneer"];

/// The error the phase machine must raise for `op` in `phase`, if any.
fn expected_error(phase: Phase, op: &Op, bids: usize) -> Option<ErrorCode> {
    match op {
        Op::Configure(valid) => match phase {
            Phase::Announced if *valid => None,
            Phase::Announced => Some(ErrorCode::Invalid),
            _ => Some(ErrorCode::WrongPhase),
        },
        Op::Bid { bidder, variant } => {
            if phase != Phase::Bidding {
                Some(ErrorCode::WrongPhase)
            } else if *bidder >= 2 {
                Some(ErrorCode::UnknownBidder)
            } else if *variant == 3 {
                Some(ErrorCode::Invalid)
            } else {
                None
            }
        }
        Op::Search(_) => match phase {
            Phase::Bidding if bids == 0 => Some(ErrorCode::NoBids),
            Phase::Bidding => None,
            _ => Some(ErrorCode::WrongPhase),
        },
    }
}

fn apply(store: &SessionStore, id: &str, op: &Op) -> Result<(), ErrorCode> {
    let r = match op {
        Op::Configure(valid) => store.configure(id, quick_config(*valid)).map(|_| ()),
        Op::Bid { bidder, variant } => store.submit_bid(id, NAMES[*bidder], bid(*variant)).map(|_| ()),
        Op::Search(seed) => store.run_search(id, *seed).map(|_| ()),
    };
    r.map_err(|e| e.code)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_operation_sequences(ops in prop::collection::vec(op(), 1..14)) {
        let store = memory_store();
        let id = store.create_session(hp_spec()).unwrap().id;
        for op in &ops {
            let before = store.get_session(&id).unwrap();
            let journal_before = store.journal(&id).unwrap().len();
            let expected = expected_error(before.phase, op, before.bids.len());
            match (apply(&store, &id, op), expected) {
                (Ok(()), None) => {
                    let after = store.get_session(&id).unwrap();
                    prop_assert!(reachable(before.phase, after.phase), "{:?} -> {:?}", before.phase, after.phase);
                    prop_assert!(after.last_seq > before.last_seq);
                }
                (Err(code), Some(want)) => {
                    prop_assert_eq!(code, want);
                    prop_assert_eq!(store.get_session(&id).unwrap(), before);
                    prop_assert_eq!(store.journal(&id).unwrap().len(), journal_before);
                }
                (got, want) => prop_assert!(false, "op {:?} in {:?}: got {:?}, expected {:?}", op, before.phase, got, want),
            }
            let journal = store.journal(&id).unwrap();
            let seqs: Vec<u64> = journal.iter().map(|e| e.seq).collect();
            prop_assert_eq!(seqs, (1..=journal.len() as u64).collect::<Vec<_>>());
            prop_assert_eq!(replay(&journal).unwrap(), store.get_session(&id).unwrap());
        }
        let end = store.get_session(&id).unwrap();
        if end.phase.is_terminal() {
            prop_assert!(end.result.is_some());
        } else {
            prop_assert!(end.result.is_none());
            prop_assert_eq!(store.view(&id, &Viewer::Public).unwrap()["settled_revenue"].clone(), Value::Null);
        }
    }
}

#[test]
fn phase_transitions_are_forward_only() {
    use Phase::*;
    let all = [Announced, Configured, Bidding, Searching, Settled, Void];
    for (i, a) in all.iter().enumerate() {
        for b in &all[..=i] {
            assert!(!a.can_move_to(*b), "{a:?} -> {b:?}");
        }
    }
    assert!(Searching.can_move_to(Settled) && Searching.can_move_to(Void));
    assert!(Settled.is_terminal() && Void.is_terminal() && !Searching.is_terminal());
}
