//! Hierarchical multi-relation aggregation.
//!
//! The neighbor-based embedding of an interacting node is computed in two
//! stages. Intra-relation aggregation pools the related neighbors of one
//! relation type with multi-head attention: each neighbor's previous
//! embedding is projected per head, scored against the center jointly with
//! a learned attribute weight, normalized across the group, pooled, and
//! passed through the configured activation; heads are averaged. Inter-
//! relation aggregation stacks the three per-relation embeddings into a
//! 3-row matrix and fuses them with scaled dot-product self-attention
//! followed by a projection and a softmax.
//!
//! Relation types with no related neighbors contribute a zero row so the
//! stacked shape never changes; when all three rows are empty the whole
//! stage is bypassed and the neighbor-based embedding is the zero vector.

use serde::Serialize;

use crate::config::{HyperParams, IntraActivation};
use crate::error::{Error, Result};
use crate::ingest::{DatasetStats, NodeRef};
use crate::params::{ModelParameters, ParamLayout};
use crate::relation::{RelationAttribute, RelationType};
use crate::tape::{NodeId, Tape};

/// A related neighbor staged for aggregation: its previous-interaction
/// embedding (a constant under single-step truncation) and the relation
/// attribute of the edge that reached it.
#[derive(Debug, Clone)]
pub struct StagedNeighbor {
    pub node: NodeRef,
    pub embedding: Vec<f64>,
    pub attr: RelationAttribute,
}

/// Related neighbors of one center, grouped by relation slot.
#[derive(Debug, Clone, Default)]
pub struct RelationGroups {
    pub groups: [Vec<StagedNeighbor>; 3],
}

impl RelationGroups {
    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.is_empty())
    }
}

/// Per-head diagnostics of one relation group.
#[derive(Debug, Clone, Serialize)]
pub struct HeadTrace {
    /// Raw attention scores before normalization (empty under uniform
    /// attention).
    pub raw_scores: Vec<f64>,
    /// Normalized coefficients over the group; sums to one.
    pub coefficients: Vec<f64>,
    /// Head output after the configured activation.
    pub output: Vec<f64>,
}

/// Diagnostics of one relation group.
#[derive(Debug, Clone, Serialize)]
pub struct RelationTrace {
    pub relation: RelationType,
    pub neighbors: Vec<NodeRef>,
    /// Attribute weights over the group; sums to one.
    pub attr_weights: Vec<f64>,
    pub heads: Vec<HeadTrace>,
}

/// Full diagnostics of one aggregation: per-relation traces and the
/// row-stochastic inter-relation attention matrix. Both are empty when the
/// center had no related neighbors at all.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AttentionTrace {
    pub relations: Vec<RelationTrace>,
    pub inter_attention: Vec<Vec<f64>>,
}

/// Aggregation knobs derived from [`HyperParams`].
#[derive(Debug, Clone, Copy)]
pub struct AggregatorOpts {
    pub leaky_relu_slope: f64,
    pub intra_activation: IntraActivation,
    pub use_attention: bool,
}

impl From<&HyperParams> for AggregatorOpts {
    fn from(h: &HyperParams) -> Self {
        Self {
            leaky_relu_slope: h.leaky_relu_slope,
            intra_activation: h.intra_activation,
            use_attention: h.ablation.use_attention,
        }
    }
}

/// Normalized attribute features of one edge: elapsed time scaled by the
/// mean inter-event gap, and the weight (log-compressed for count-typed
/// relations, raw for cosines).
pub fn attr_features(
    attr: &RelationAttribute,
    relation: RelationType,
    now: f64,
    mean_gap: f64,
) -> [f64; 2] {
    let elapsed = (now - attr.time) / mean_gap;
    let weight = match relation {
        RelationType::Historical | RelationType::Common => (1.0 + attr.weight).ln(),
        RelationType::SequenceSimilarity => attr.weight,
    };
    [elapsed, weight]
}

/// Builds the full neighbor-based embedding subgraph on `tape`.
///
/// Returns the output node and the collected trace. Empty groups become
/// zero rows; if every group is empty the result is a constant zero vector
/// and the trace is empty.
pub(crate) fn neighbor_embedding_nodes(
    tape: &mut Tape,
    layout: &ParamLayout,
    opts: &AggregatorOpts,
    center: NodeId,
    groups: &RelationGroups,
    now: f64,
    mean_gap: f64,
) -> (NodeId, AttentionTrace) {
    let dim = layout.dim;
    if groups.is_empty() {
        return (tape.zeros(dim), AttentionTrace::default());
    }
    let center_hat: Vec<NodeId> =
        (0..layout.heads).map(|k| tape.matvec(layout.w_in[k], center)).collect();

    let mut trace = AttentionTrace::default();
    let mut rows = [0usize; 3];
    for slot in 0..3 {
        let group = &groups.groups[slot];
        if group.is_empty() {
            rows[slot] = tape.zeros(dim);
            continue;
        }
        let (row, rel_trace) =
            intra_nodes(tape, layout, opts, &center_hat, group, slot, now, mean_gap);
        rows[slot] = row;
        trace.relations.push(rel_trace);
    }
    let (out, inter) = inter_nodes(tape, layout, opts, rows);
    trace.inter_attention = inter;
    (out, trace)
}

/// One relation group through the per-head attention pipeline.
#[allow(clippy::too_many_arguments)]
fn intra_nodes(
    tape: &mut Tape,
    layout: &ParamLayout,
    opts: &AggregatorOpts,
    center_hat: &[NodeId],
    group: &[StagedNeighbor],
    slot: usize,
    now: f64,
    mean_gap: f64,
) -> (NodeId, RelationTrace) {
    let relation = RelationType::ALL[slot];
    let m = group.len();
    let nb_consts: Vec<NodeId> =
        group.iter().map(|n| tape.constant(n.embedding.clone())).collect();

    // Attribute weights over the group (Eq. 4 softmax is taken across the
    // related neighbors of this relation type).
    let (p_scalars, attr_weights) = if opts.use_attention {
        let w_feat = tape.param(layout.w_feat);
        let b_feat = tape.param(layout.b_feat);
        let raws: Vec<NodeId> = group
            .iter()
            .map(|n| {
                let feats = attr_features(&n.attr, relation, now, mean_gap);
                let f = tape.constant(feats.to_vec());
                let d = tape.dot(w_feat, f);
                tape.add(d, b_feat)
            })
            .collect();
        let cat = tape.concat(&raws);
        let p_vec = tape.softmax(cat);
        let scalars: Vec<NodeId> = (0..m).map(|j| tape.pick(p_vec, j)).collect();
        let values = tape.value(p_vec).to_vec();
        (Some(scalars), values)
    } else {
        (None, vec![1.0 / m as f64; m])
    };

    let mut heads = Vec::with_capacity(layout.heads);
    let mut head_outputs = Vec::with_capacity(layout.heads);
    for k in 0..layout.heads {
        let hats: Vec<NodeId> = nb_consts.iter().map(|&c| tape.matvec(layout.w_in[k], c)).collect();
        let (pooled, raw_scores, coefficients) = if let Some(p) = &p_scalars {
            let w_intra = tape.param(layout.w_intra[slot][k]);
            let scores: Vec<NodeId> = hats
                .iter()
                .zip(p)
                .map(|(&hat, &pj)| {
                    let cat = tape.concat(&[center_hat[k], hat]);
                    let d = tape.dot(w_intra, cat);
                    let weighted = tape.mul(d, pj);
                    tape.leaky_relu(weighted, opts.leaky_relu_slope)
                })
                .collect();
            let raw_values: Vec<f64> = scores.iter().map(|&s| tape.scalar(s)).collect();
            let cat = tape.concat(&scores);
            let alpha = tape.softmax(cat);
            let coeff_values = tape.value(alpha).to_vec();
            let terms: Vec<NodeId> = hats
                .iter()
                .enumerate()
                .map(|(j, &hat)| {
                    let a = tape.pick(alpha, j);
                    tape.scale(hat, a)
                })
                .collect();
            (tape.add_all(&terms), raw_values, coeff_values)
        } else {
            let terms: Vec<NodeId> =
                hats.iter().map(|&hat| tape.mul_const(hat, 1.0 / m as f64)).collect();
            (tape.add_all(&terms), Vec::new(), vec![1.0 / m as f64; m])
        };
        let out = match opts.intra_activation {
            IntraActivation::Softmax => tape.softmax(pooled),
            IntraActivation::Elu => tape.elu(pooled),
        };
        heads.push(HeadTrace {
            raw_scores,
            coefficients,
            output: tape.value(out).to_vec(),
        });
        head_outputs.push(out);
    }
    let sum = tape.add_all(&head_outputs);
    let row = tape.mul_const(sum, 1.0 / layout.heads as f64);
    let rel_trace = RelationTrace {
        relation,
        neighbors: group.iter().map(|n| n.node).collect(),
        attr_weights,
        heads,
    };
    (row, rel_trace)
}

/// Scaled dot-product self-attention over the three stacked relation rows,
/// then the output projection and softmax.
fn inter_nodes(
    tape: &mut Tape,
    layout: &ParamLayout,
    opts: &AggregatorOpts,
    rows: [NodeId; 3],
) -> (NodeId, Vec<Vec<f64>>) {
    let queries: Vec<NodeId> = rows.iter().map(|&r| tape.matvec(layout.w_query, r)).collect();
    let keys: Vec<NodeId> = rows.iter().map(|&r| tape.matvec(layout.w_key, r)).collect();
    let values: Vec<NodeId> = rows.iter().map(|&r| tape.matvec(layout.w_value, r)).collect();
    let inv_sqrt = 1.0 / (layout.attn_dim as f64).sqrt();

    let mut z_rows = Vec::with_capacity(3);
    let mut attention = Vec::with_capacity(3);
    for r in 0..3 {
        if opts.use_attention {
            let scores: Vec<NodeId> = (0..3)
                .map(|s| {
                    let d = tape.dot(queries[r], keys[s]);
                    tape.mul_const(d, inv_sqrt)
                })
                .collect();
            let cat = tape.concat(&scores);
            let arow = tape.softmax(cat);
            attention.push(tape.value(arow).to_vec());
            let terms: Vec<NodeId> = (0..3)
                .map(|s| {
                    let a = tape.pick(arow, s);
                    tape.scale(values[s], a)
                })
                .collect();
            z_rows.push(tape.add_all(&terms));
        } else {
            attention.push(vec![1.0 / 3.0; 3]);
            let terms: Vec<NodeId> =
                (0..3).map(|s| tape.mul_const(values[s], 1.0 / 3.0)).collect();
            z_rows.push(tape.add_all(&terms));
        }
    }
    let flat = tape.concat(&z_rows);
    let lin = tape.matvec(layout.w_out, flat);
    let b_out = tape.param(layout.b_out);
    let biased = tape.add(lin, b_out);
    let out = tape.softmax(biased);
    (out, attention)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Attribute weights `p` of one related-neighbor group: a learned score of
/// each edge's normalized features, softmax-normalized across the group.
pub fn relation_feature_weight(
    attrs: &[RelationAttribute],
    relation: RelationType,
    now: f64,
    stats: &DatasetStats,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    if attrs.is_empty() {
        return Err(Error::Empty("relation attribute group"));
    }
    let mut tape = Tape::new(&params.values);
    let w_feat = tape.param(params.layout.w_feat);
    let b_feat = tape.param(params.layout.b_feat);
    let raws: Vec<NodeId> = attrs
        .iter()
        .map(|a| {
            let feats = attr_features(a, relation, now, stats.mean_inter_event_gap);
            let f = tape.constant(feats.to_vec());
            let d = tape.dot(w_feat, f);
            tape.add(d, b_feat)
        })
        .collect();
    let cat = tape.concat(&raws);
    let p = tape.softmax(cat);
    Ok(tape.value(p).to_vec())
}

/// Aggregates one relation group around a center embedding. An empty group
/// yields the zero vector and no trace.
#[allow(clippy::too_many_arguments)]
pub fn intra_relation_aggregate(
    center_emb: &[f64],
    neighbors: &[StagedNeighbor],
    relation: RelationType,
    params: &ModelParameters,
    opts: &AggregatorOpts,
    now: f64,
    stats: &DatasetStats,
) -> Result<(Vec<f64>, Option<RelationTrace>)> {
    let layout = &params.layout;
    check_dim(layout.dim, center_emb.len())?;
    for n in neighbors {
        check_dim(layout.dim, n.embedding.len())?;
    }
    if neighbors.is_empty() {
        return Ok((vec![0.0; layout.dim], None));
    }
    let mut tape = Tape::new(&params.values);
    let center = tape.constant(center_emb.to_vec());
    let center_hat: Vec<NodeId> =
        (0..layout.heads).map(|k| tape.matvec(layout.w_in[k], center)).collect();
    let (row, trace) = intra_nodes(
        &mut tape,
        layout,
        opts,
        &center_hat,
        neighbors,
        relation.slot(),
        now,
        stats.mean_inter_event_gap,
    );
    Ok((tape.value(row).to_vec(), Some(trace)))
}

/// Fuses three per-relation embeddings into the neighbor-based embedding.
/// Returns the output vector and the 3x3 attention matrix rows.
pub fn inter_relation_aggregate(
    relation_embeddings: &[Vec<f64>; 3],
    params: &ModelParameters,
    opts: &AggregatorOpts,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let layout = &params.layout;
    for r in relation_embeddings {
        check_dim(layout.dim, r.len())?;
    }
    let mut tape = Tape::new(&params.values);
    let rows = [
        tape.constant(relation_embeddings[0].clone()),
        tape.constant(relation_embeddings[1].clone()),
        tape.constant(relation_embeddings[2].clone()),
    ];
    let (out, attention) = inter_nodes(&mut tape, layout, opts, rows);
    Ok((tape.value(out).to_vec(), attention))
}

/// End-to-end neighbor-based embedding of one center from its staged
/// related-neighbor groups.
pub fn neighbor_based_embedding(
    center_emb: &[f64],
    groups: &RelationGroups,
    params: &ModelParameters,
    hyper: &HyperParams,
    now: f64,
    stats: &DatasetStats,
) -> Result<(Vec<f64>, AttentionTrace)> {
    let layout = &params.layout;
    check_dim(layout.dim, center_emb.len())?;
    for g in &groups.groups {
        for n in g {
            check_dim(layout.dim, n.embedding.len())?;
        }
    }
    let opts = AggregatorOpts::from(hyper);
    let mut tape = Tape::new(&params.values);
    let center = tape.constant(center_emb.to_vec());
    let (out, trace) = neighbor_embedding_nodes(
        &mut tape,
        layout,
        &opts,
        center,
        groups,
        now,
        stats.mean_inter_event_gap,
    );
    Ok((tape.value(out).to_vec(), trace))
}
