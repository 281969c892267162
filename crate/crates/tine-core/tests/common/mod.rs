//! Shared brute-force oracles used by several integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tine_core::ingest::{Interaction, NodeKind, NodeRef};
use tine_core::relation::{HistoryIndex, RelationAttribute, RelationEdge, RelationType};
use tine_core::seq_embed::{Corpus, SeqTrainConfig, SequenceEmbeddingModel};
use tine_core::synth::random_stream;

fn endpoint(s: &Interaction, kind: NodeKind) -> u32 {
    match kind {
        NodeKind::User => s.user,
        NodeKind::Item => s.item,
    }
}

/// Historical edges from the raw prefix: per partner, count and last time.
fn oracle_historical(prefix: &[Interaction], center: NodeRef) -> Vec<RelationEdge> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<u32, (u64, f64)> = BTreeMap::new();
    for s in prefix {
        if endpoint(s, center.kind) == center.index {
            let partner = endpoint(s, center.kind.other());
            let e = acc.entry(partner).or_insert((0, f64::NEG_INFINITY));
            e.0 += 1;
            e.1 = e.1.max(s.timestamp);
        }
    }
    acc.into_iter()
        .map(|(p, (count, last))| RelationEdge {
            neighbor: NodeRef { kind: center.kind.other(), index: p },
            relation: RelationType::Historical,
            attr: RelationAttribute { time: last, weight: count as f64 },
        })
        .collect()
}

/// Common edges from the raw prefix: all event pairs through a shared
/// partner within the window.
fn oracle_common(prefix: &[Interaction], center: NodeRef, window: f64) -> Vec<RelationEdge> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<u32, (u64, f64)> = BTreeMap::new();
    for a in prefix {
        if endpoint(a, center.kind) != center.index {
            continue;
        }
        let shared = endpoint(a, center.kind.other());
        for b in prefix {
            let other = endpoint(b, center.kind);
            if other == center.index || endpoint(b, center.kind.other()) != shared {
                continue;
            }
            if (a.timestamp - b.timestamp).abs() <= window {
                let e = acc.entry(other).or_insert((0, f64::NEG_INFINITY));
                e.0 += 1;
                e.1 = e.1.max(a.timestamp.max(b.timestamp));
            }
        }
    }
    acc.into_iter()
        .map(|(p, (count, time))| RelationEdge {
            neighbor: NodeRef { kind: center.kind, index: p },
            relation: RelationType::Common,
            attr: RelationAttribute { time, weight: count as f64 },
        })
        .collect()
}

/// Similarity edges from the raw prefix: every active same-kind node with
/// cosine strictly above the threshold under the given (frozen) model.
fn oracle_similarity(
    prefix: &[Interaction],
    model: &SequenceEmbeddingModel,
    center: NodeRef,
    threshold: f64,
) -> Vec<RelationEdge> {
    use std::collections::BTreeMap;
    let mut last: BTreeMap<u32, f64> = BTreeMap::new();
    for s in prefix {
        let node = endpoint(s, center.kind);
        let e = last.entry(node).or_insert(f64::NEG_INFINITY);
        *e = e.max(s.timestamp);
    }
    let center_last = match last.get(&center.index) {
        Some(&t) => t,
        None => return Vec::new(),
    };
    let center_doc = match model.raw_doc(center) {
        Some(d) => d.to_vec(),
        None => return Vec::new(),
    };
    let unit = |v: &[f64]| -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    };
    let center_unit = unit(&center_doc);
    let mut edges = Vec::new();
    for (&cand, &cand_last) in &last {
        if cand == center.index {
            continue;
        }
        let node = NodeRef { kind: center.kind, index: cand };
        let doc = match model.raw_doc(node) {
            Some(d) => d.to_vec(),
            None => continue,
        };
        let cu = unit(&doc);
        let cos: f64 = center_unit.iter().zip(&cu).map(|(a, b)| a * b).sum();
        if cos > threshold {
            edges.push(RelationEdge {
                neighbor: node,
                relation: RelationType::SequenceSimilarity,
                attr: RelationAttribute { time: center_last.max(cand_last), weight: cos },
            });
        }
    }
    edges
}

fn assert_edges_match(got: &[RelationEdge], expected: &[RelationEdge], what: &str) {
    assert_eq!(got.len(), expected.len(), "{what}: edge count {} vs {}", got.len(), expected.len());
    for (g, e) in got.iter().zip(expected) {
        assert_eq!(g.neighbor, e.neighbor, "{what}: neighbor set diverged");
        assert_eq!(g.relation, e.relation);
        assert_eq!(g.attr.time, e.attr.time, "{what}: time attribute for {}", g.neighbor);
        match g.relation {
            RelationType::SequenceSimilarity => assert!(
                (g.attr.weight - e.attr.weight).abs() <= 1e-12,
                "{what}: cosine {} vs {}",
                g.attr.weight,
                e.attr.weight
            ),
            _ => assert_eq!(g.attr.weight, e.attr.weight, "{what}: count for {}", g.neighbor),
        }
    }
}

/// Runs all three miners against the oracle over random prefixes of random
/// streams. Shared by the unit-style test below and the acceptance suite.
pub fn check_streams(streams: usize, max_events: usize, seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for run in 0..streams {
        let users = rng.gen_range(3..10);
        let items = rng.gen_range(3..10);
        let events = rng.gen_range(10..=max_events);
        let horizon = rng.gen_range(50.0..500.0);
        let net = random_stream(users, items, events, horizon, rng.gen());
        let window = rng.gen_range(5.0..horizon / 2.0);
        let threshold = rng.gen_range(-0.5..0.9);

        // A frozen sequence model over the full stream; mining and oracle
        // both consult it, the oracle through raw doc vectors.
        let corpus = Corpus::from_interactions(net.interactions(), net.user_count(), net.item_count());
        let cfg = SeqTrainConfig { initial_passes: 2, ..SeqTrainConfig::default() };
        let model = SequenceEmbeddingModel::fit_initial(&corpus, 12, cfg, rng.gen()).unwrap();

        let mut index = HistoryIndex::new(net.user_count(), net.item_count());
        let stream = net.interactions();
        // Query at a handful of prefix points to keep the quadratic oracle
        // affordable.
        let mut query_points: Vec<usize> =
            (0..6).map(|_| rng.gen_range(0..stream.len())).collect();
        query_points.sort_unstable();
        query_points.dedup();
        let mut cursor = 0usize;
        for &q in &query_points {
            while cursor < q {
                index.record_interaction(&stream[cursor]).unwrap();
                cursor += 1;
            }
            let prefix = &stream[..q];
            let now = stream[q].timestamp;
            for center in [
                NodeRef::user(stream[q].user),
                NodeRef::item(stream[q].item),
                NodeRef::user(rng.gen_range(0..net.user_count()) as u32),
            ] {
                let got_h = index.mine_historical(center, now);
                assert_edges_match(&got_h, &oracle_historical(prefix, center), "historical");
                let got_c = index.mine_common(center, now, window);
                assert_edges_match(&got_c, &oracle_common(prefix, center, window), "common");
                let got_s = index
                    .mine_similarity(&model, center, now, threshold, usize::MAX)
                    .unwrap();
                assert_edges_match(
                    &got_s,
                    &oracle_similarity(prefix, &model, center, threshold),
                    "similarity",
                );
            }
        }
        // Causality: every mined edge references the recorded prefix only.
        let _ = run;
    }
}

