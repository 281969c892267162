//! Dependency-aware batch scheduling.
//!
//! Interactions inside one batch must not share a node, and must not touch
//! a node that another interaction's local relation graph reads. Each
//! interaction is therefore assigned to batch
//! `max(lastU[u], lastV[v], idxN) + 1`, where `lastU`/`lastV` track the
//! last batch that wrote each node and `idxN` is the maximum last-batch
//! index over the full-history relation neighbors of both endpoints.
//! Neighbor sets are mined over the whole stream up front: prefix-time
//! relation sets only grow toward them, so the schedule stays conservative
//! for any prefix.

use std::collections::HashMap;

use crate::error::Result;
use crate::ingest::{Interaction, NodeKind, NodeRef};
use crate::relation::{build_local_graph, HistoryIndex, MiningParams};
use crate::seq_embed::SequenceEmbeddingModel;

/// Full-history relation neighbors per node, symmetrized.
#[derive(Debug, Clone, Default)]
pub struct NeighborMap {
    users: Vec<Vec<NodeRef>>,
    items: Vec<Vec<NodeRef>>,
}

impl NeighborMap {
    pub fn new(user_count: usize, item_count: usize) -> Self {
        Self { users: vec![Vec::new(); user_count], items: vec![Vec::new(); item_count] }
    }

    /// Builds a map from explicit adjacency, symmetrizing and deduplicating.
    pub fn from_edges(user_count: usize, item_count: usize, edges: &[(NodeRef, NodeRef)]) -> Self {
        let mut map = Self::new(user_count, item_count);
        for &(a, b) in edges {
            map.slot_mut(a).push(b);
            map.slot_mut(b).push(a);
        }
        map.finish();
        map
    }

    fn slot_mut(&mut self, node: NodeRef) -> &mut Vec<NodeRef> {
        match node.kind {
            NodeKind::User => &mut self.users[node.index as usize],
            NodeKind::Item => &mut self.items[node.index as usize],
        }
    }

    fn finish(&mut self) {
        for list in self.users.iter_mut().chain(self.items.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn neighbors(&self, node: NodeRef) -> &[NodeRef] {
        match node.kind {
            NodeKind::User => &self.users[node.index as usize],
            NodeKind::Item => &self.items[node.index as usize],
        }
    }
}

/// Mines the full-history local relation graph of every active node and
/// collects the symmetrized neighbor sets used by the scheduler. The
/// similarity candidate cap is lifted here: scheduling must over-, never
/// under-approximate the neighbor reads.
pub fn scheduler_neighbor_map(
    index: &HistoryIndex,
    model: &SequenceEmbeddingModel,
    mining: &MiningParams,
    now: f64,
) -> Result<NeighborMap> {
    let mut mining = *mining;
    mining.similarity_candidate_cap = usize::MAX;
    let mut edges = Vec::new();
    let user_count = index.user_count();
    let item_count = index.item_count();
    for kind in [NodeKind::User, NodeKind::Item] {
        let count = match kind {
            NodeKind::User => user_count,
            NodeKind::Item => item_count,
        };
        for i in 0..count {
            let node = NodeRef { kind, index: i as u32 };
            if index.degree(node) == 0 {
                continue;
            }
            let graph = build_local_graph(index, model, node, now, &mining)?;
            for e in graph.edges {
                edges.push((node, e.neighbor));
            }
        }
    }
    Ok(NeighborMap::from_edges(user_count, item_count, &edges))
}

/// Ordered partition of the stream into parallel-safe batches.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    pub batches: Vec<Vec<Interaction>>,
}

impl BatchSchedule {
    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    pub fn interaction_count(&self) -> usize {
        self.batches.iter().map(|b| b.len()).sum()
    }

    pub fn size_histogram(&self) -> HashMap<usize, usize> {
        let mut hist = HashMap::new();
        for b in &self.batches {
            *hist.entry(b.len()).or_insert(0) += 1;
        }
        hist
    }
}

/// Assigns every interaction to batch `max(lastU, lastV, idxN) + 1`.
pub fn tn_batch(stream: &[Interaction], neighbors: &NeighborMap) -> BatchSchedule {
    let mut last_user: HashMap<u32, usize> = HashMap::new();
    let mut last_item: HashMap<u32, usize> = HashMap::new();
    let last_of = |node: NodeRef, lu: &HashMap<u32, usize>, li: &HashMap<u32, usize>| -> usize {
        match node.kind {
            NodeKind::User => lu.get(&node.index).copied().unwrap_or(0),
            NodeKind::Item => li.get(&node.index).copied().unwrap_or(0),
        }
    };
    let mut batches: Vec<Vec<Interaction>> = Vec::new();
    for s in stream {
        let user = NodeRef::user(s.user);
        let item = NodeRef::item(s.item);
        let mut idx_n = 0usize;
        for &n in neighbors.neighbors(user).iter().chain(neighbors.neighbors(item)) {
            idx_n = idx_n.max(last_of(n, &last_user, &last_item));
        }
        let idx = last_of(user, &last_user, &last_item)
            .max(last_of(item, &last_user, &last_item))
            .max(idx_n)
            + 1;
        if idx > batches.len() {
            batches.resize_with(idx, Vec::new);
        }
        batches[idx - 1].push(*s);
        last_user.insert(s.user, idx);
        last_item.insert(s.item, idx);
    }
    BatchSchedule { batches }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(user: u32, item: u32, t: f64, i: u32) -> Interaction {
        Interaction { user, item, timestamp: t, seq_index: i }
    }

    #[test]
    fn independent_interactions_share_one_batch() {
        let stream = [s(0, 0, 1.0, 1), s(1, 1, 2.0, 2), s(2, 2, 3.0, 3)];
        let schedule = tn_batch(&stream, &NeighborMap::new(3, 3));
        assert_eq!(schedule.batch_count(), 1);
        assert_eq!(schedule.batches[0].len(), 3);
    }

    #[test]
    fn repeated_user_forces_new_batches() {
        let stream = [s(0, 0, 1.0, 1), s(0, 1, 2.0, 2)];
        let schedule = tn_batch(&stream, &NeighborMap::new(1, 2));
        assert_eq!(schedule.batch_count(), 2);
        assert_eq!(schedule.batches[0], vec![stream[0]]);
        assert_eq!(schedule.batches[1], vec![stream[1]]);
    }

    #[test]
    fn relation_neighbor_forces_new_batch() {
        // u1 is a relation neighbor of u0: the second interaction must wait.
        let stream = [s(0, 0, 1.0, 1), s(1, 1, 2.0, 2)];
        let map = NeighborMap::from_edges(2, 2, &[(NodeRef::user(0), NodeRef::user(1))]);
        let schedule = tn_batch(&stream, &map);
        assert_eq!(schedule.batch_count(), 2);
        assert_eq!(schedule.batches[0], vec![stream[0]]);
        assert_eq!(schedule.batches[1], vec![stream[1]]);
    }

    #[test]
    fn batches_concatenate_back_to_the_stream() {
        let stream: Vec<Interaction> =
            (0..40).map(|i| s(i % 5, (i * 3) % 7, i as f64, i + 1)).collect();
        let schedule = tn_batch(&stream, &NeighborMap::new(5, 7));
        let mut flat: Vec<Interaction> = schedule.batches.iter().flatten().cloned().collect();
        flat.sort_by_key(|x| x.seq_index);
        assert_eq!(flat, stream);
        assert_eq!(schedule.interaction_count(), stream.len());
        // No trailing or interior empty batches.
        assert!(schedule.batches.iter().all(|b| !b.is_empty()));
    }

    #[test]
    fn node_appears_at_most_once_per_batch_and_monotonically() {
        let stream: Vec<Interaction> =
            (0..60).map(|i| s(i % 4, (i * 7) % 5, i as f64, i + 1)).collect();
        let map = NeighborMap::from_edges(
            4,
            5,
            &[(NodeRef::user(0), NodeRef::user(1)), (NodeRef::item(2), NodeRef::item(3))],
        );
        let schedule = tn_batch(&stream, &map);
        let mut seen_batch: HashMap<NodeRef, usize> = HashMap::new();
        for (b, batch) in schedule.batches.iter().enumerate() {
            let mut in_this_batch = Vec::new();
            for s in batch {
                for node in [NodeRef::user(s.user), NodeRef::item(s.item)] {
                    assert!(!in_this_batch.contains(&node), "node twice in batch {b}");
                    in_this_batch.push(node);
                    if let Some(&prev) = seen_batch.get(&node) {
                        assert!(prev < b, "node batch index must increase");
                    }
                    seen_batch.insert(node, b);
                }
            }
        }
    }
}
