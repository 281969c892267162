//! History index and local relation graph mining.
//!
//! Three relation types connect nodes around an interacting node: two nodes
//! that interacted before share a *historical* relation (weight = number of
//! interactions, time = last interaction); two same-kind nodes that
//! interacted with a shared partner within the time slot `T` share a
//! *common* relation (weight = number of co-interaction pairs, time = the
//! qualifying co-interaction timestamp closest to now); two same-kind nodes
//! whose sequence embeddings have cosine similarity strictly above the
//! threshold share a *sequence-similarity* relation.
//!
//! Mining is causal: the index reflects the stream strictly before the
//! interaction being processed, so an interaction never influences its own
//! local graph.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{Interaction, NodeKind, NodeRef};
use crate::seq_embed::SequenceEmbeddingModel;

/// The three relation types, a closed enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    Historical,
    Common,
    SequenceSimilarity,
}

impl RelationType {
    pub const ALL: [RelationType; 3] =
        [RelationType::Historical, RelationType::Common, RelationType::SequenceSimilarity];

    /// Fixed position of this relation type in stacked per-relation arrays.
    pub fn slot(self) -> usize {
        match self {
            RelationType::Historical => 0,
            RelationType::Common => 1,
            RelationType::SequenceSimilarity => 2,
        }
    }
}

/// Attribute pair carried by every relation edge: the relation time and a
/// weight (an interaction count, or a cosine similarity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationAttribute {
    pub time: f64,
    pub weight: f64,
}

/// One edge of a local relation graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationEdge {
    pub neighbor: NodeRef,
    pub relation: RelationType,
    pub attr: RelationAttribute,
}

/// Star graph around one node at one instant; at most one edge per
/// (neighbor, relation type) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRelationGraph {
    pub center: NodeRef,
    pub as_of: f64,
    pub edges: Vec<RelationEdge>,
}

impl LocalRelationGraph {
    pub fn edges_of(&self, relation: RelationType) -> impl Iterator<Item = &RelationEdge> {
        self.edges.iter().filter(move |e| e.relation == relation)
    }

    /// Deduplicated neighbor set, every relation type pooled.
    pub fn neighbors(&self) -> Vec<NodeRef> {
        let mut out: Vec<NodeRef> = self.edges.iter().map(|e| e.neighbor).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Knobs consumed by the miners.
#[derive(Debug, Clone, Copy)]
pub struct MiningParams {
    /// Time slot `T` (seconds) for common-interaction mining.
    pub common_window_secs: f64,
    /// Strict cosine threshold for similarity edges.
    pub similarity_threshold: f64,
    /// Candidate pool size for similarity mining.
    pub similarity_candidate_cap: usize,
    pub use_historical: bool,
    pub use_common: bool,
    pub use_sequence: bool,
}

impl From<&crate::config::HyperParams> for MiningParams {
    fn from(h: &crate::config::HyperParams) -> Self {
        Self {
            common_window_secs: h.common_window_secs,
            similarity_threshold: h.similarity_threshold,
            similarity_candidate_cap: h.similarity_candidate_cap,
            use_historical: h.ablation.use_historical,
            use_common: h.ablation.use_common,
            use_sequence: h.ablation.use_sequence,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct PairStats {
    count: u64,
    last: f64,
}

/// Incrementally maintained view of the stream processed so far.
///
/// Single writer between batches; miners only read.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryIndex {
    /// Per user: partner item -> (count, last time), ordered by item index.
    user_pairs: Vec<BTreeMap<u32, PairStats>>,
    /// Per item: partner user -> (count, last time).
    item_pairs: Vec<BTreeMap<u32, PairStats>>,
    /// Per user: (item, time) events in stream order.
    user_events: Vec<Vec<(u32, f64)>>,
    /// Per item: (user, time) events in stream order.
    item_events: Vec<Vec<(u32, f64)>>,
    user_last: Vec<Option<f64>>,
    item_last: Vec<Option<f64>>,
    last_timestamp: Option<f64>,
    recorded: usize,
}

impl HistoryIndex {
    pub fn new(user_count: usize, item_count: usize) -> Self {
        Self {
            user_pairs: vec![BTreeMap::new(); user_count],
            item_pairs: vec![BTreeMap::new(); item_count],
            user_events: vec![Vec::new(); user_count],
            item_events: vec![Vec::new(); item_count],
            user_last: vec![None; user_count],
            item_last: vec![None; item_count],
            last_timestamp: None,
            recorded: 0,
        }
    }

    /// Builds an index covering a whole slice at once.
    pub fn from_slice(slice: &[Interaction], user_count: usize, item_count: usize) -> Result<Self> {
        let mut idx = Self::new(user_count, item_count);
        for s in slice {
            idx.record_interaction(s)?;
        }
        Ok(idx)
    }

    pub fn recorded(&self) -> usize {
        self.recorded
    }

    pub fn user_count(&self) -> usize {
        self.user_pairs.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_pairs.len()
    }

    /// Appends one interaction. Timestamps must be non-decreasing.
    pub fn record_interaction(&mut self, s: &Interaction) -> Result<()> {
        if let Some(last) = self.last_timestamp {
            if s.timestamp < last {
                return Err(Error::OutOfOrder { timestamp: s.timestamp, last });
            }
        }
        let u = s.user as usize;
        let v = s.item as usize;
        let up = self.user_pairs[u].entry(s.item).or_default();
        up.count += 1;
        up.last = s.timestamp;
        let ip = self.item_pairs[v].entry(s.user).or_default();
        ip.count += 1;
        ip.last = s.timestamp;
        self.user_events[u].push((s.item, s.timestamp));
        self.item_events[v].push((s.user, s.timestamp));
        self.user_last[u] = Some(s.timestamp);
        self.item_last[v] = Some(s.timestamp);
        self.last_timestamp = Some(s.timestamp);
        self.recorded += 1;
        Ok(())
    }

    /// Last interaction time of a node, if it interacted at all.
    pub fn last_time(&self, node: NodeRef) -> Option<f64> {
        match node.kind {
            NodeKind::User => self.user_last[node.index as usize],
            NodeKind::Item => self.item_last[node.index as usize],
        }
    }

    /// Number of interactions a node has participated in.
    pub fn degree(&self, node: NodeRef) -> usize {
        match node.kind {
            NodeKind::User => self.user_events[node.index as usize].len(),
            NodeKind::Item => self.item_events[node.index as usize].len(),
        }
    }

    /// Partner sequence of a node in time order (the node's "sentence").
    pub fn partner_sequence(&self, node: NodeRef) -> impl Iterator<Item = (NodeRef, f64)> + '_ {
        let (events, partner_kind) = match node.kind {
            NodeKind::User => (&self.user_events[node.index as usize], NodeKind::Item),
            NodeKind::Item => (&self.item_events[node.index as usize], NodeKind::User),
        };
        events.iter().map(move |&(p, t)| (NodeRef { kind: partner_kind, index: p }, t))
    }

    /// Same-kind nodes with at least one recorded interaction, most recent
    /// first (ties broken by index), truncated to `cap`, excluding `center`.
    pub fn recently_active(&self, kind: NodeKind, exclude: Option<u32>, cap: usize) -> Vec<u32> {
        let last = match kind {
            NodeKind::User => &self.user_last,
            NodeKind::Item => &self.item_last,
        };
        let mut active: Vec<(f64, u32)> = last
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (t, i as u32)))
            .filter(|&(_, i)| Some(i) != exclude)
            .collect();
        active.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        active.truncate(cap);
        active.into_iter().map(|(_, i)| i).collect()
    }

    /// Historical-relation edges of `center`: one per partner it ever
    /// interacted with, weighted by interaction count.
    pub fn mine_historical(&self, center: NodeRef, now: f64) -> Vec<RelationEdge> {
        let (pairs, partner_kind) = match center.kind {
            NodeKind::User => (&self.user_pairs[center.index as usize], NodeKind::Item),
            NodeKind::Item => (&self.item_pairs[center.index as usize], NodeKind::User),
        };
        pairs
            .iter()
            .map(|(&p, st)| {
                debug_assert!(st.last <= now);
                RelationEdge {
                    neighbor: NodeRef { kind: partner_kind, index: p },
                    relation: RelationType::Historical,
                    attr: RelationAttribute { time: st.last, weight: st.count as f64 },
                }
            })
            .collect()
    }

    /// Common-relation edges of `center`: same-kind nodes that interacted
    /// with a shared partner within `window` seconds. The weight counts
    /// qualifying co-interaction pairs; the time attribute is the latest
    /// qualifying co-interaction time, where one co-interaction's time is
    /// the later of its two events.
    pub fn mine_common(&self, center: NodeRef, now: f64, window: f64) -> Vec<RelationEdge> {
        let center_events: &[(u32, f64)] = match center.kind {
            NodeKind::User => &self.user_events[center.index as usize],
            NodeKind::Item => &self.item_events[center.index as usize],
        };
        let mut acc: BTreeMap<u32, (u64, f64)> = BTreeMap::new();
        for &(shared, t1) in center_events {
            let partner_events: &[(u32, f64)] = match center.kind {
                NodeKind::User => &self.item_events[shared as usize],
                NodeKind::Item => &self.user_events[shared as usize],
            };
            for &(other, t2) in partner_events {
                if other == center.index {
                    continue;
                }
                if (t1 - t2).abs() <= window {
                    let e = acc.entry(other).or_insert((0, f64::NEG_INFINITY));
                    e.0 += 1;
                    e.1 = e.1.max(t1.max(t2));
                }
            }
        }
        acc.into_iter()
            .map(|(other, (count, time))| {
                debug_assert!(time <= now);
                RelationEdge {
                    neighbor: NodeRef { kind: center.kind, index: other },
                    relation: RelationType::Common,
                    attr: RelationAttribute { time, weight: count as f64 },
                }
            })
            .collect()
    }

    /// Sequence-similarity edges of `center`: same-kind candidates whose
    /// sequence embedding cosine exceeds the threshold (strictly). The time
    /// attribute is the later of the two nodes' last interaction times.
    pub fn mine_similarity(
        &self,
        model: &SequenceEmbeddingModel,
        center: NodeRef,
        now: f64,
        threshold: f64,
        candidate_cap: usize,
    ) -> Result<Vec<RelationEdge>> {
        let center_emb = match model.embedding_of(center)? {
            Some(e) => e,
            None => return Ok(Vec::new()),
        };
        let center_last = match self.last_time(center) {
            Some(t) => t,
            None => return Ok(Vec::new()),
        };
        let mut edges = Vec::new();
        for cand in self.recently_active(center.kind, Some(center.index), candidate_cap) {
            let node = NodeRef { kind: center.kind, index: cand };
            let cand_emb = match model.embedding_of(node)? {
                Some(e) => e,
                None => continue,
            };
            let cos = crate::seq_embed::cosine_similarity(&center_emb, &cand_emb)?;
            if cos > threshold {
                let time = center_last.max(self.last_time(node).expect("active candidate"));
                debug_assert!(time <= now);
                edges.push(RelationEdge {
                    neighbor: node,
                    relation: RelationType::SequenceSimilarity,
                    attr: RelationAttribute { time, weight: cos },
                });
            }
        }
        edges.sort_by_key(|e| e.neighbor.index);
        Ok(edges)
    }
}

impl HistoryIndex {
    pub(crate) fn write_to<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        use byteorder::{LittleEndian, WriteBytesExt};
        let write_pairs = |w: &mut W, pairs: &[BTreeMap<u32, PairStats>]| -> Result<()> {
            w.write_u64::<LittleEndian>(pairs.len() as u64)?;
            for map in pairs {
                w.write_u64::<LittleEndian>(map.len() as u64)?;
                for (k, st) in map {
                    w.write_u32::<LittleEndian>(*k)?;
                    w.write_u64::<LittleEndian>(st.count)?;
                    w.write_f64::<LittleEndian>(st.last)?;
                }
            }
            Ok(())
        };
        let write_events = |w: &mut W, events: &[Vec<(u32, f64)>]| -> Result<()> {
            w.write_u64::<LittleEndian>(events.len() as u64)?;
            for list in events {
                w.write_u64::<LittleEndian>(list.len() as u64)?;
                for (p, t) in list {
                    w.write_u32::<LittleEndian>(*p)?;
                    w.write_f64::<LittleEndian>(*t)?;
                }
            }
            Ok(())
        };
        let write_lasts = |w: &mut W, lasts: &[Option<f64>]| -> Result<()> {
            w.write_u64::<LittleEndian>(lasts.len() as u64)?;
            for l in lasts {
                match l {
                    Some(t) => {
                        w.write_u8(1)?;
                        w.write_f64::<LittleEndian>(*t)?;
                    }
                    None => w.write_u8(0)?,
                }
            }
            Ok(())
        };
        write_pairs(w, &self.user_pairs)?;
        write_pairs(w, &self.item_pairs)?;
        write_events(w, &self.user_events)?;
        write_events(w, &self.item_events)?;
        write_lasts(w, &self.user_last)?;
        write_lasts(w, &self.item_last)?;
        match self.last_timestamp {
            Some(t) => {
                w.write_u8(1)?;
                w.write_f64::<LittleEndian>(t)?;
            }
            None => w.write_u8(0)?,
        }
        w.write_u64::<LittleEndian>(self.recorded as u64)?;
        Ok(())
    }

    pub(crate) fn read_from<R: std::io::Read>(r: &mut R) -> Result<Self> {
        use byteorder::{LittleEndian, ReadBytesExt};
        let read_pairs = |r: &mut R| -> Result<Vec<BTreeMap<u32, PairStats>>> {
            let n = r.read_u64::<LittleEndian>()? as usize;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let len = r.read_u64::<LittleEndian>()? as usize;
                let mut map = BTreeMap::new();
                for _ in 0..len {
                    let k = r.read_u32::<LittleEndian>()?;
                    let count = r.read_u64::<LittleEndian>()?;
                    let last = r.read_f64::<LittleEndian>()?;
                    map.insert(k, PairStats { count, last });
                }
                out.push(map);
            }
            Ok(out)
        };
        let read_events = |r: &mut R| -> Result<Vec<Vec<(u32, f64)>>> {
            let n = r.read_u64::<LittleEndian>()? as usize;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let len = r.read_u64::<LittleEndian>()? as usize;
                let mut list = Vec::with_capacity(len);
                for _ in 0..len {
                    let p = r.read_u32::<LittleEndian>()?;
                    let t = r.read_f64::<LittleEndian>()?;
                    list.push((p, t));
                }
                out.push(list);
            }
            Ok(out)
        };
        let read_lasts = |r: &mut R| -> Result<Vec<Option<f64>>> {
            let n = r.read_u64::<LittleEndian>()? as usize;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(match r.read_u8()? {
                    0 => None,
                    _ => Some(r.read_f64::<LittleEndian>()?),
                });
            }
            Ok(out)
        };
        let user_pairs = read_pairs(r)?;
        let item_pairs = read_pairs(r)?;
        let user_events = read_events(r)?;
        let item_events = read_events(r)?;
        let user_last = read_lasts(r)?;
        let item_last = read_lasts(r)?;
        let last_timestamp = match r.read_u8()? {
            0 => None,
            _ => Some(r.read_f64::<LittleEndian>()?),
        };
        let recorded = r.read_u64::<LittleEndian>()? as usize;
        Ok(Self {
            user_pairs,
            item_pairs,
            user_events,
            item_events,
            user_last,
            item_last,
            last_timestamp,
            recorded,
        })
    }
}

/// Mines all enabled relation types and assembles the local relation graph
/// of `center` as of `now`.
pub fn build_local_graph(
    index: &HistoryIndex,
    model: &SequenceEmbeddingModel,
    center: NodeRef,
    now: f64,
    params: &MiningParams,
) -> Result<LocalRelationGraph> {
    let mut edges = Vec::new();
    if params.use_historical {
        edges.extend(index.mine_historical(center, now));
    }
    if params.use_common {
        edges.extend(index.mine_common(center, now, params.common_window_secs));
    }
    if params.use_sequence {
        edges.extend(index.mine_similarity(
            model,
            center,
            now,
            params.similarity_threshold,
            params.similarity_candidate_cap,
        )?);
    }
    Ok(LocalRelationGraph { center, as_of: now, edges })
}

/// Membership test for the related-neighbor window: activity strictly
/// after the center's previous interaction and no later than now. A center
/// without a previous interaction admits all past activity.
pub fn is_related(neighbor_last: f64, center_prev_time: Option<f64>, now: f64) -> bool {
    neighbor_last <= now && center_prev_time.map_or(true, |p| neighbor_last > p)
}

/// Neighbors of `graph` whose own last interaction falls inside the
/// related-neighbor window.
pub fn related_neighbors(
    graph: &LocalRelationGraph,
    index: &HistoryIndex,
    center_prev_time: Option<f64>,
    now: f64,
) -> Vec<NodeRef> {
    let mut out: Vec<NodeRef> = graph
        .edges
        .iter()
        .map(|e| e.neighbor)
        .filter(|&n| {
            index
                .last_time(n)
                .map_or(false, |t| is_related(t, center_prev_time, now))
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq_embed::{Corpus, SeqTrainConfig, SequenceEmbeddingModel};

    fn s(user: u32, item: u32, t: f64, i: u32) -> Interaction {
        Interaction { user, item, timestamp: t, seq_index: i }
    }

    fn empty_model() -> SequenceEmbeddingModel {
        SequenceEmbeddingModel::new(8, SeqTrainConfig::default(), 1)
    }

    #[test]
    fn record_updates_counts_and_last_times() {
        let mut idx = HistoryIndex::new(2, 2);
        idx.record_interaction(&s(0, 0, 5.0, 1)).unwrap();
        let edges = idx.mine_historical(NodeRef::user(0), 6.0);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].attr.weight, 1.0);
        assert_eq!(edges[0].attr.time, 5.0);

        idx.record_interaction(&s(0, 0, 9.0, 2)).unwrap();
        let edges = idx.mine_historical(NodeRef::user(0), 10.0);
        assert_eq!(edges[0].attr.weight, 2.0);
        assert_eq!(edges[0].attr.time, 9.0);
    }

    #[test]
    fn out_of_order_record_is_rejected() {
        let mut idx = HistoryIndex::new(3, 3);
        idx.record_interaction(&s(0, 0, 5.0, 1)).unwrap();
        idx.record_interaction(&s(0, 0, 9.0, 2)).unwrap();
        let err = idx.record_interaction(&s(1, 1, 3.0, 3)).unwrap_err();
        assert!(matches!(err, Error::OutOfOrder { .. }));
    }

    #[test]
    fn historical_empty_for_unknown_center() {
        let idx = HistoryIndex::new(2, 2);
        assert!(idx.mine_historical(NodeRef::user(0), 1.0).is_empty());
    }

    #[test]
    fn historical_counts_and_last_time() {
        let mut idx = HistoryIndex::new(1, 1);
        idx.record_interaction(&s(0, 0, 3.0, 1)).unwrap();
        idx.record_interaction(&s(0, 0, 7.0, 2)).unwrap();
        let edges = idx.mine_historical(NodeRef::user(0), 10.0);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].neighbor, NodeRef::item(0));
        assert_eq!(edges[0].attr, RelationAttribute { time: 7.0, weight: 2.0 });
    }

    #[test]
    fn historical_one_edge_per_partner() {
        let mut idx = HistoryIndex::new(1, 2);
        idx.record_interaction(&s(0, 0, 3.0, 1)).unwrap();
        idx.record_interaction(&s(0, 1, 4.0, 2)).unwrap();
        let edges = idx.mine_historical(NodeRef::user(0), 5.0);
        assert_eq!(edges.len(), 2);
        assert!(edges.iter().all(|e| e.attr.weight == 1.0));
    }

    #[test]
    fn common_within_window() {
        const DAY: f64 = 86_400.0;
        let mut idx = HistoryIndex::new(2, 1);
        idx.record_interaction(&s(0, 0, 1.0 * DAY, 1)).unwrap();
        idx.record_interaction(&s(1, 0, 2.0 * DAY, 2)).unwrap();
        let edges = idx.mine_common(NodeRef::user(0), 5.0 * DAY, 3.0 * DAY);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].neighbor, NodeRef::user(1));
        assert_eq!(edges[0].attr, RelationAttribute { time: 2.0 * DAY, weight: 1.0 });
    }

    #[test]
    fn common_outside_window_is_dropped() {
        const DAY: f64 = 86_400.0;
        let mut idx = HistoryIndex::new(2, 1);
        idx.record_interaction(&s(0, 0, 1.0 * DAY, 1)).unwrap();
        idx.record_interaction(&s(1, 0, 6.0 * DAY, 2)).unwrap();
        assert!(idx.mine_common(NodeRef::user(0), 7.0 * DAY, 3.0 * DAY).is_empty());
    }

    #[test]
    fn common_needs_other_nodes() {
        let mut idx = HistoryIndex::new(1, 1);
        idx.record_interaction(&s(0, 0, 1.0, 1)).unwrap();
        idx.record_interaction(&s(0, 0, 2.0, 2)).unwrap();
        assert!(idx.mine_common(NodeRef::user(0), 3.0, 10.0).is_empty());
    }

    #[test]
    fn common_counts_pairs_and_takes_latest_witness() {
        let mut idx = HistoryIndex::new(2, 1);
        idx.record_interaction(&s(0, 0, 1.0, 1)).unwrap();
        idx.record_interaction(&s(1, 0, 2.0, 2)).unwrap();
        idx.record_interaction(&s(0, 0, 3.0, 3)).unwrap();
        // Pairs within window 2: (1,2), (1,3)? |1-3|=2 ok, (3,2)=1 ok -> center u0
        // pairs with u1: (t1=1,t2=2) and (t1=3,t2=2).
        let edges = idx.mine_common(NodeRef::user(0), 4.0, 2.0);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].attr.weight, 2.0);
        assert_eq!(edges[0].attr.time, 3.0);
    }

    #[test]
    fn similarity_unknown_center_is_empty() {
        let idx = HistoryIndex::new(2, 2);
        let model = empty_model();
        let edges = idx
            .mine_similarity(&model, NodeRef::user(0), 1.0, 0.5, 100)
            .unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn similarity_threshold_is_strict() {
        // Two users with identical sentences have cosine exactly 1 only in
        // the limit; build a tiny controlled model instead via fit with zero
        // passes and identical random vectors is fiddly, so drive the
        // threshold logic through mine_similarity with a trained model.
        let mut idx = HistoryIndex::new(2, 2);
        idx.record_interaction(&s(0, 0, 1.0, 1)).unwrap();
        idx.record_interaction(&s(1, 0, 2.0, 2)).unwrap();
        idx.record_interaction(&s(0, 1, 3.0, 3)).unwrap();
        idx.record_interaction(&s(1, 1, 4.0, 4)).unwrap();
        let corpus = Corpus::from_index(&idx);
        let model =
            SequenceEmbeddingModel::fit_initial(&corpus, 8, SeqTrainConfig::default(), 7).unwrap();
        // Threshold above 1 admits nothing even for identical sequences.
        let none = idx
            .mine_similarity(&model, NodeRef::user(0), 5.0, 1.0 + 1e-12, 100)
            .unwrap();
        assert!(none.is_empty());
        // Threshold -1.1 admits every candidate.
        let all = idx
            .mine_similarity(&model, NodeRef::user(0), 5.0, -1.1, 100)
            .unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].neighbor, NodeRef::user(1));
        assert_eq!(all[0].attr.time, 4.0);
        // Exact equality with the threshold does not qualify.
        let at = idx
            .mine_similarity(&model, NodeRef::user(0), 5.0, all[0].attr.weight, 100)
            .unwrap();
        assert!(at.is_empty());
    }

    #[test]
    fn local_graph_unions_miners() {
        const DAY: f64 = 86_400.0;
        let mut idx = HistoryIndex::new(2, 1);
        idx.record_interaction(&s(0, 0, 1.0 * DAY, 1)).unwrap();
        idx.record_interaction(&s(1, 0, 2.0 * DAY, 2)).unwrap();
        let params = MiningParams {
            common_window_secs: 3.0 * DAY,
            similarity_threshold: 0.5,
            similarity_candidate_cap: 100,
            use_historical: true,
            use_common: true,
            use_sequence: false,
        };
        let g = build_local_graph(&idx, &empty_model(), NodeRef::user(0), 5.0 * DAY, &params)
            .unwrap();
        // Historical edge to item 0, common edge to user 1; same neighbor
        // through different types stays distinct.
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.edges_of(RelationType::Historical).count(), 1);
        assert_eq!(g.edges_of(RelationType::Common).count(), 1);
        assert_eq!(g.as_of, 5.0 * DAY);
    }

    #[test]
    fn empty_miners_give_empty_graph() {
        let idx = HistoryIndex::new(1, 1);
        let params = MiningParams {
            common_window_secs: 1.0,
            similarity_threshold: 0.5,
            similarity_candidate_cap: 10,
            use_historical: true,
            use_common: true,
            use_sequence: true,
        };
        let g = build_local_graph(&idx, &empty_model(), NodeRef::user(0), 1.0, &params).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn related_window_is_left_open_right_closed() {
        assert!(is_related(4.0, Some(3.0), 10.0));
        assert!(!is_related(3.0, Some(3.0), 10.0));
        assert!(is_related(10.0, Some(3.0), 10.0));
        assert!(!is_related(11.0, Some(3.0), 10.0));
        // Cold center admits all past activity.
        assert!(is_related(0.0, None, 10.0));
    }

    #[test]
    fn related_neighbors_filters_by_last_activity() {
        let mut idx = HistoryIndex::new(2, 2);
        idx.record_interaction(&s(0, 0, 3.0, 1)).unwrap();
        idx.record_interaction(&s(1, 1, 4.0, 2)).unwrap();
        let graph = LocalRelationGraph {
            center: NodeRef::user(0),
            as_of: 10.0,
            edges: vec![
                RelationEdge {
                    neighbor: NodeRef::user(1),
                    relation: RelationType::Common,
                    attr: RelationAttribute { time: 4.0, weight: 1.0 },
                },
                RelationEdge {
                    neighbor: NodeRef::item(0),
                    relation: RelationType::Historical,
                    attr: RelationAttribute { time: 3.0, weight: 1.0 },
                },
            ],
        };
        // Window (3, 10]: user 1 (last 4.0) in, item 0 (last 3.0) out.
        let related = related_neighbors(&graph, &idx, Some(3.0), 10.0);
        assert_eq!(related, vec![NodeRef::user(1)]);
        // Empty graph -> empty set.
        let empty = LocalRelationGraph { center: NodeRef::user(0), as_of: 10.0, edges: vec![] };
        assert!(related_neighbors(&empty, &idx, None, 10.0).is_empty());
    }
}
