//! Brute-force oracle checks for the three relation miners.

mod common;

use tine_core::ingest::NodeRef;
use tine_core::relation::{HistoryIndex, RelationEdge};
use tine_core::synth::random_stream;

#[test]
fn miners_match_brute_force_on_random_streams() {
    check_streams(10, 120, 2024);
}

#[test]
fn mining_is_causal() {
    // The interaction being processed never contributes to its own graph:
    // mine before recording, then record and verify the counts change.
    let net = random_stream(4, 4, 60, 200.0, 9);
    let mut index = HistoryIndex::new(net.user_count(), net.item_count());
    let stream = net.interactions();
    for s in stream {
        let center = NodeRef::user(s.user);
        let before = index.mine_historical(center, s.timestamp);
        for e in &before {
            assert!(e.attr.time <= s.timestamp);
        }
        index.record_interaction(s).unwrap();
        let after = index.mine_historical(center, s.timestamp);
        let count_of = |edges: &[RelationEdge]| -> f64 {
            edges
                .iter()
                .find(|e| e.neighbor == NodeRef::item(s.item))
                .map(|e| e.attr.weight)
                .unwrap_or(0.0)
        };
        assert_eq!(count_of(&after), count_of(&before) + 1.0);
    }
}
