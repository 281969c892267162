//! Loading, validating, and splitting interaction logs.
//!
//! Input format is `user_id,item_id,timestamp` CSV (optional header,
//! UTF-8, `\n` newlines). User and item identifiers live in disjoint
//! universes and are mapped to dense indexes in order of first appearance
//! in the time-sorted stream, so any permutation of rows with distinct
//! timestamps loads to the same network.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of a node in the interaction network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    User,
    Item,
}

impl NodeKind {
    pub fn other(self) -> Self {
        match self {
            NodeKind::User => NodeKind::Item,
            NodeKind::Item => NodeKind::User,
        }
    }
}

/// A node identified by kind and dense per-kind index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub index: u32,
}

impl NodeRef {
    pub fn user(index: u32) -> Self {
        Self { kind: NodeKind::User, index }
    }

    pub fn item(index: u32) -> Self {
        Self { kind: NodeKind::Item, index }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::User => write!(f, "user#{}", self.index),
            NodeKind::Item => write!(f, "item#{}", self.index),
        }
    }
}

/// One (user, item, timestamp) event of the stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    /// Seconds since epoch; non-decreasing along the stream.
    pub timestamp: f64,
    /// 1-based position in the time-sorted stream.
    pub seq_index: u32,
}

/// The full time-sorted interaction stream plus id maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalInteractionNetwork {
    interactions: Vec<Interaction>,
    user_names: Vec<String>,
    item_names: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
}

impl TemporalInteractionNetwork {
    /// Builds a network from raw (user, item, timestamp) events.
    ///
    /// Events are stably sorted by timestamp (ties keep input order) and
    /// dense ids are assigned by first appearance in the sorted stream.
    pub fn from_events(events: Vec<(String, String, f64)>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        for (line, (_, _, t)) in events.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Parse {
                    line: line + 1,
                    msg: format!("timestamp must be a finite non-negative real, got {t}"),
                });
            }
        }
        let mut order: Vec<usize> = (0..events.len()).collect();
        order.sort_by(|&a, &b| {
            events[a].2.partial_cmp(&events[b].2).expect("finite timestamps")
        });

        let mut user_index = HashMap::new();
        let mut item_index = HashMap::new();
        let mut user_names = Vec::new();
        let mut item_names = Vec::new();
        let mut interactions = Vec::with_capacity(events.len());
        for (pos, &src) in order.iter().enumerate() {
            let (ref u, ref v, t) = events[src];
            let user = *user_index.entry(u.clone()).or_insert_with(|| {
                user_names.push(u.clone());
                (user_names.len() - 1) as u32
            });
            let item = *item_index.entry(v.clone()).or_insert_with(|| {
                item_names.push(v.clone());
                (item_names.len() - 1) as u32
            });
            interactions.push(Interaction {
                user,
                item,
                timestamp: t,
                seq_index: (pos + 1) as u32,
            });
        }
        Ok(Self { interactions, user_names, item_names, user_index, item_index })
    }

    /// Loads a network from a `user_id,item_id,timestamp` CSV file.
    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }

    /// Parses CSV text. A first line whose third column is a label such as
    /// `timestamp`, `time`, or `t` is treated as a header.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 3 comma-separated fields, got {}", fields.len()),
                });
            }
            let ts_field = fields[2].trim();
            if i == 0 && matches!(ts_field.to_ascii_lowercase().as_str(), "timestamp" | "time" | "t")
            {
                continue; // header row
            }
            let t: f64 = ts_field.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("cannot parse timestamp {ts_field:?}"),
            })?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("timestamp must be a finite non-negative real, got {t}"),
                });
            }
            let u = fields[0].trim();
            let v = fields[1].trim();
            if u.is_empty() || v.is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "empty id field".into() });
            }
            events.push((u.to_string(), v.to_string(), t));
        }
        Self::from_events(events)
    }

    /// Writes the stream back out as headerless CSV in stream order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.interactions {
            writeln!(
                w,
                "{},{},{}",
                self.user_names[s.user as usize], self.item_names[s.item as usize], s.timestamp
            )?;
        }
        Ok(())
    }

    pub fn dump_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn user_count(&self) -> usize {
        self.user_names.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_names.len()
    }

    pub fn user_name(&self, index: u32) -> &str {
        &self.user_names[index as usize]
    }

    pub fn item_name(&self, index: u32) -> &str {
        &self.item_names[index as usize]
    }

    pub fn node_name(&self, node: NodeRef) -> &str {
        match node.kind {
            NodeKind::User => self.user_name(node.index),
            NodeKind::Item => self.item_name(node.index),
        }
    }

    pub fn user_id(&self, name: &str) -> Option<u32> {
        self.user_index.get(name).copied()
    }

    pub fn item_id(&self, name: &str) -> Option<u32> {
        self.item_index.get(name).copied()
    }

    /// Looks a node up by external id, users first (the universes are
    /// disjoint, but an id string may exist in both).
    pub fn find_node(&self, name: &str) -> Option<NodeRef> {
        self.user_id(name)
            .map(NodeRef::user)
            .or_else(|| self.item_id(name).map(NodeRef::item))
    }

    /// Splits the stream into contiguous train/valid/test slices on
    /// interaction-count quantiles.
    pub fn temporal_split(&self, spec: &SplitSpec) -> Result<(&[Interaction], &[Interaction], &[Interaction])> {
        spec.validate()?;
        if self.interactions.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let n = self.interactions.len();
        let n_train = (spec.train_fraction * n as f64).floor() as usize;
        let n_valid = (spec.valid_fraction * n as f64).floor() as usize;
        let (train, rest) = self.interactions.split_at(n_train.min(n));
        let (valid, test) = rest.split_at(n_valid.min(rest.len()));
        Ok((train, valid, test))
    }
}

/// Fractions of the stream assigned to train/valid/test, in time order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, valid_fraction: 0.1, test_fraction: 0.1 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidSplit("fractions must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Aggregate statistics of a training split, used for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Mean gap between consecutive interactions of the same node, pooled
    /// over all users and items; 1.0 when no node interacts twice (or all
    /// gaps are zero).
    pub mean_inter_event_gap: f64,
    pub user_count: usize,
    pub item_count: usize,
    pub interaction_count: usize,
}

/// Computes normalization statistics over a (training) slice.
pub fn compute_stats(train: &[Interaction], user_count: usize, item_count: usize) -> DatasetStats {
    let mut last_user: Vec<Option<f64>> = vec![None; user_count];
    let mut last_item: Vec<Option<f64>> = vec![None; item_count];
    let mut sum = 0.0;
    let mut gaps = 0usize;
    for s in train {
        if let Some(prev) = last_user[s.user as usize] {
            sum += s.timestamp - prev;
            gaps += 1;
        }
        last_user[s.user as usize] = Some(s.timestamp);
        if let Some(prev) = last_item[s.item as usize] {
            sum += s.timestamp - prev;
            gaps += 1;
        }
        last_item[s.item as usize] = Some(s.timestamp);
    }
    let mean = if gaps > 0 { sum / gaps as f64 } else { 1.0 };
    DatasetStats {
        // Guard against all-identical timestamps; the sentinel keeps later
        // divisions well-defined.
        mean_inter_event_gap: if mean > 0.0 { mean } else { 1.0 },
        user_count,
        item_count,
        interaction_count: train.len(),
    }
}
