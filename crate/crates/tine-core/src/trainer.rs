//! Prediction head, loss, batch processing, and the training loop.
//!
//! Each interaction is processed against immutable snapshots of the node
//! states, history index, and sequence model taken at the start of its
//! batch: mine the local relation graphs of both endpoints, aggregate the
//! related neighbors into neighbor-based embeddings, predict the item
//! embedding, form the three-term loss, and advance both endpoints with
//! the recurrent cells. Gradients obey single-step truncation: previous
//! embeddings and neighbor embeddings are constants, except that a cold
//! node's previous embedding IS the trainable kind-shared initial
//! embedding, which therefore receives gradients.
//!
//! Within a batch, interactions touch disjoint nodes (enforced), so
//! forward/backward runs on parallel workers in fixed-size chunks whose
//! partial gradients are reduced in chunk order: results are bitwise
//! reproducible regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::aggregator::{neighbor_embedding_nodes, AggregatorOpts, AttentionTrace, RelationGroups, StagedNeighbor};
use crate::batching::{scheduler_neighbor_map, tn_batch, BatchSchedule, NeighborMap};
use crate::config::HyperParams;
use crate::dynamics::{cell_update_node, time_encoding_node, StateStore};
use crate::error::{Error, Result};
use crate::ingest::{compute_stats, DatasetStats, Interaction, NodeKind, NodeRef, TemporalInteractionNetwork};
use crate::optim::Adam;
use crate::params::ModelParameters;
use crate::relation::{build_local_graph, is_related, HistoryIndex, MiningParams};
use crate::seq_embed::{Corpus, SeqTrainConfig, SequenceEmbeddingModel};
use crate::tape::{NodeId, Tape};

/// Interactions per parallel work unit. Fixed so that the gradient
/// reduction order (chunk order) never depends on the worker count.
const PARALLEL_CHUNK: usize = 32;

/// Previous embedding of an interacting node. `Cold` resolves to the
/// trainable kind-shared initial embedding inside the loss graph.
#[derive(Debug, Clone)]
pub enum PrevEmbedding {
    Cold,
    Warm(Vec<f64>),
}

impl PrevEmbedding {
    fn to_node(&self, tape: &mut Tape, params: &ModelParameters, kind: NodeKind) -> NodeId {
        match self {
            PrevEmbedding::Warm(v) => tape.constant(v.clone()),
            PrevEmbedding::Cold => tape.param(match kind {
                NodeKind::User => params.layout.init_user,
                NodeKind::Item => params.layout.init_item,
            }),
        }
    }
}

/// Everything one interaction's forward/backward pass needs, staged
/// against immutable snapshots.
#[derive(Debug, Clone)]
pub struct InteractionInputs {
    pub user: u32,
    pub item: u32,
    pub now: f64,
    pub user_prev: PrevEmbedding,
    pub item_prev: PrevEmbedding,
    pub delta_user: f64,
    pub delta_item: f64,
    pub user_groups: RelationGroups,
    pub item_groups: RelationGroups,
}

/// Values read back from one interaction's loss graph.
#[derive(Debug, Clone)]
pub struct ForwardArtifacts {
    pub loss: f64,
    pub prediction: Vec<f64>,
    pub user_after: Vec<f64>,
    pub item_after: Vec<f64>,
    /// Neighbor-based embeddings of the two endpoints (zero vectors when
    /// bypassed).
    pub user_neighbor_embedding: Vec<f64>,
    pub item_neighbor_embedding: Vec<f64>,
    pub user_trace: AttentionTrace,
    pub item_trace: AttentionTrace,
}

/// Predicted item embedding: `softmax(W1 u_prev + W2 h_u + b)`.
pub fn predict_item_embedding(
    u_prev: &[f64],
    neighbor_emb: &[f64],
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    let dim = params.layout.dim;
    if u_prev.len() != dim || neighbor_emb.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u_prev.len().min(neighbor_emb.len()) });
    }
    let mut tape = Tape::new(&params.values);
    let u = tape.constant(u_prev.to_vec());
    let h = tape.constant(neighbor_emb.to_vec());
    let node = predict_node(&mut tape, params, u, h);
    Ok(tape.value(node).to_vec())
}

fn predict_node(tape: &mut Tape, params: &ModelParameters, u_prev: NodeId, h_u: NodeId) -> NodeId {
    let a = tape.matvec(params.layout.head_w1, u_prev);
    let b = tape.matvec(params.layout.head_w2, h_u);
    let bias = tape.param(params.layout.head_b);
    let sum = tape.add_all(&[a, b, bias]);
    tape.softmax(sum)
}

/// Three-term loss: prediction distance plus user and item drift
/// regularizers. Distances are L2, or squared L2 when `squared` is set.
#[allow(clippy::too_many_arguments)]
pub fn interaction_loss(
    prediction: &[f64],
    truth: &[f64],
    u_after: &[f64],
    u_prev: &[f64],
    v_after: &[f64],
    v_prev: &[f64],
    lambda_user: f64,
    lambda_item: f64,
    squared: bool,
) -> Result<f64> {
    let dim = prediction.len();
    for v in [truth, u_after, u_prev, v_after, v_prev] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        if squared {
            sq
        } else {
            sq.sqrt()
        }
    };
    Ok(dist(prediction, truth)
        + lambda_user * dist(u_after, u_prev)
        + lambda_item * dist(v_after, v_prev))
}

/// Builds one interaction's full loss graph and returns the loss node plus
/// the artifact values.
pub fn build_loss_graph(
    tape: &mut Tape,
    inputs: &InteractionInputs,
    params: &ModelParameters,
    hyper: &HyperParams,
    stats: &DatasetStats,
) -> (NodeId, ForwardArtifacts) {
    let layout = &params.layout;
    let gap = stats.mean_inter_event_gap;
    let opts = AggregatorOpts::from(hyper);

    let u_prev = inputs.user_prev.to_node(tape, params, NodeKind::User);
    let v_prev = inputs.item_prev.to_node(tape, params, NodeKind::Item);

    let (h_u, user_trace) = if hyper.ablation.use_neighbors {
        neighbor_embedding_nodes(tape, layout, &opts, u_prev, &inputs.user_groups, inputs.now, gap)
    } else {
        (tape.zeros(layout.dim), AttentionTrace::default())
    };
    let (h_v, item_trace) = if hyper.ablation.use_neighbors {
        neighbor_embedding_nodes(tape, layout, &opts, v_prev, &inputs.item_groups, inputs.now, gap)
    } else {
        (tape.zeros(layout.dim), AttentionTrace::default())
    };

    let prediction = predict_node(tape, params, u_prev, h_u);

    let t_u = time_encoding_node(tape, layout, inputs.delta_user, gap);
    let u_after = cell_update_node(tape, &layout.user_cell, u_prev, v_prev, h_u, t_u);
    let t_v = time_encoding_node(tape, layout, inputs.delta_item, gap);
    let v_after = cell_update_node(tape, &layout.item_cell, v_prev, u_prev, h_v, t_v);

    let norm = |tape: &mut Tape, x: NodeId| -> NodeId {
        if hyper.squared_loss {
            tape.norm2_sq(x)
        } else {
            tape.norm2(x)
        }
    };
    // Ground truth is the item's previous-interaction embedding.
    let pred_diff = tape.sub(prediction, v_prev);
    let pred_term = norm(tape, pred_diff);
    let u_diff = tape.sub(u_after, u_prev);
    let u_norm = norm(tape, u_diff);
    let u_term = tape.mul_const(u_norm, hyper.lambda_user);
    let v_diff = tape.sub(v_after, v_prev);
    let v_norm = norm(tape, v_diff);
    let v_term = tape.mul_const(v_norm, hyper.lambda_item);
    let loss = tape.add_all(&[pred_term, u_term, v_term]);

    let artifacts = ForwardArtifacts {
        loss: tape.scalar(loss),
        prediction: tape.value(prediction).to_vec(),
        user_after: tape.value(u_after).to_vec(),
        item_after: tape.value(v_after).to_vec(),
        user_neighbor_embedding: tape.value(h_u).to_vec(),
        item_neighbor_embedding: tape.value(h_v).to_vec(),
        user_trace,
        item_trace,
    };
    (loss, artifacts)
}

fn validate_inputs(inputs: &InteractionInputs, params: &ModelParameters) -> Result<()> {
    let dim = params.layout.dim;
    let check = |v: &PrevEmbedding| -> Result<()> {
        if let PrevEmbedding::Warm(e) = v {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: e.len() });
            }
        }
        Ok(())
    };
    check(&inputs.user_prev)?;
    check(&inputs.item_prev)?;
    for groups in [&inputs.user_groups, &inputs.item_groups] {
        for g in &groups.groups {
            for n in g {
                if n.embedding.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: n.embedding.len() });
                }
            }
        }
    }
    if inputs.delta_user < 0.0 {
        return Err(Error::NegativeInterval(inputs.delta_user));
    }
    if inputs.delta_item < 0.0 {
        return Err(Error::NegativeInterval(inputs.delta_item));
    }
    Ok(())
}

/// Forward pass only.
pub fn forward_interaction(
    inputs: &InteractionInputs,
    params: &ModelParameters,
    hyper: &HyperParams,
    stats: &DatasetStats,
) -> Result<ForwardArtifacts> {
    validate_inputs(inputs, params)?;
    let mut tape = Tape::new(&params.values);
    let (_, artifacts) = build_loss_graph(&mut tape, inputs, params, hyper, stats);
    Ok(artifacts)
}

/// Forward plus reverse sweep; parameter gradients accumulate into `grads`.
pub fn backward_interaction(
    inputs: &InteractionInputs,
    params: &ModelParameters,
    hyper: &HyperParams,
    stats: &DatasetStats,
    grads: &mut [f64],
) -> Result<ForwardArtifacts> {
    validate_inputs(inputs, params)?;
    let mut tape = Tape::new(&params.values);
    let (loss, artifacts) = build_loss_graph(&mut tape, inputs, params, hyper, stats);
    tape.backward(loss, grads);
    Ok(artifacts)
}

/// Stages one interaction against the current snapshots: previous
/// embeddings, time intervals, and the related-neighbor groups of both
/// endpoints.
pub fn stage_interaction(
    s: &Interaction,
    states: &StateStore,
    index: &HistoryIndex,
    seq_model: &SequenceEmbeddingModel,
    hyper: &HyperParams,
) -> Result<InteractionInputs> {
    let now = s.timestamp;
    let user = NodeRef::user(s.user);
    let item = NodeRef::item(s.item);
    let prev_of = |node: NodeRef| -> (PrevEmbedding, f64) {
        match states.get(node) {
            Some(st) => (PrevEmbedding::Warm(st.embedding.clone()), now - st.last_time),
            None => (PrevEmbedding::Cold, 0.0),
        }
    };
    let (user_prev, delta_user) = prev_of(user);
    let (item_prev, delta_item) = prev_of(item);
    let mining = MiningParams::from(hyper);
    let (user_groups, item_groups) = if hyper.ablation.use_neighbors {
        (
            stage_groups(user, states.last_time(user), now, states, index, seq_model, &mining)?,
            stage_groups(item, states.last_time(item), now, states, index, seq_model, &mining)?,
        )
    } else {
        (RelationGroups::default(), RelationGroups::default())
    };
    Ok(InteractionInputs {
        user: s.user,
        item: s.item,
        now,
        user_prev,
        item_prev,
        delta_user,
        delta_item,
        user_groups,
        item_groups,
    })
}

fn stage_groups(
    center: NodeRef,
    center_prev_time: Option<f64>,
    now: f64,
    states: &StateStore,
    index: &HistoryIndex,
    seq_model: &SequenceEmbeddingModel,
    mining: &MiningParams,
) -> Result<RelationGroups> {
    let graph = build_local_graph(index, seq_model, center, now, mining)?;
    let mut groups = RelationGroups::default();
    for edge in graph.edges {
        let last = index
            .last_time(edge.neighbor)
            .ok_or_else(|| Error::Internal(format!("mined neighbor {} has no history", edge.neighbor)))?;
        if !is_related(last, center_prev_time, now) {
            continue;
        }
        let state = states.get(edge.neighbor).ok_or_else(|| {
            Error::Internal(format!("related neighbor {} has no dynamic state", edge.neighbor))
        })?;
        groups.groups[edge.relation.slot()].push(StagedNeighbor {
            node: edge.neighbor,
            embedding: state.embedding.clone(),
            attr: edge.attr,
        });
    }
    Ok(groups)
}

/// Result of processing one batch against snapshots.
#[derive(Debug)]
pub struct BatchOutput {
    /// Sum of per-interaction losses.
    pub loss: f64,
    /// Per-interaction artifacts, in batch order.
    pub artifacts: Vec<ForwardArtifacts>,
    /// Summed gradients of the batch loss, when requested.
    pub grads: Option<Vec<f64>>,
}

fn check_batch_conflicts(batch: &[Interaction], map: &NeighborMap) -> Result<()> {
    use std::collections::HashMap;
    let mut owners: HashMap<NodeRef, usize> = HashMap::new();
    for (pos, s) in batch.iter().enumerate() {
        for node in [NodeRef::user(s.user), NodeRef::item(s.item)] {
            if owners.insert(node, pos).is_some() {
                return Err(Error::ScheduleViolation(format!(
                    "node {node} interacts more than once in one batch"
                )));
            }
        }
    }
    for (pos, s) in batch.iter().enumerate() {
        for endpoint in [NodeRef::user(s.user), NodeRef::item(s.item)] {
            for n in map.neighbors(endpoint) {
                if let Some(&owner) = owners.get(n) {
                    if owner != pos {
                        return Err(Error::ScheduleViolation(format!(
                            "neighbor {n} of {endpoint} interacts in the same batch"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Processes one batch: every interaction independently against the given
/// snapshots. State commits and history recording are the caller's job
/// (they happen between batches).
#[allow(clippy::too_many_arguments)]
pub fn process_batch(
    batch: &[Interaction],
    params: &ModelParameters,
    states: &StateStore,
    index: &HistoryIndex,
    seq_model: &SequenceEmbeddingModel,
    hyper: &HyperParams,
    stats: &DatasetStats,
    compute_grads: bool,
    conflict_check: Option<&NeighborMap>,
) -> Result<BatchOutput> {
    if let Some(map) = conflict_check {
        check_batch_conflicts(batch, map)?;
    }
    if batch.is_empty() {
        return Ok(BatchOutput {
            loss: 0.0,
            artifacts: Vec::new(),
            grads: compute_grads.then(|| vec![0.0; params.values.len()]),
        });
    }

    struct ChunkOut {
        loss: f64,
        artifacts: Vec<ForwardArtifacts>,
        grads: Option<Vec<f64>>,
    }
    let run_chunk = |chunk: &[Interaction]| -> Result<ChunkOut> {
        let mut grads = compute_grads.then(|| vec![0.0; params.values.len()]);
        let mut artifacts = Vec::with_capacity(chunk.len());
        let mut loss = 0.0;
        for s in chunk {
            let inputs = stage_interaction(s, states, index, seq_model, hyper)?;
            let art = match &mut grads {
                Some(g) => backward_interaction(&inputs, params, hyper, stats, g)?,
                None => forward_interaction(&inputs, params, hyper, stats)?,
            };
            loss += art.loss;
            artifacts.push(art);
        }
        Ok(ChunkOut { loss, artifacts, grads })
    };

    let chunks: Vec<&[Interaction]> = batch.chunks(PARALLEL_CHUNK).collect();
    let outputs: Vec<ChunkOut> = if chunks.len() > 1 {
        chunks.par_iter().map(|c| run_chunk(c)).collect::<Result<Vec<_>>>()?
    } else {
        vec![run_chunk(chunks[0])?]
    };

    // Fixed-order reduction over chunks keeps results bitwise identical
    // for any worker count.
    let mut loss = 0.0;
    let mut artifacts = Vec::with_capacity(batch.len());
    let mut grads = compute_grads.then(|| vec![0.0; params.values.len()]);
    for out in outputs {
        loss += out.loss;
        artifacts.extend(out.artifacts);
        if let (Some(total), Some(part)) = (&mut grads, out.grads) {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
    }
    Ok(BatchOutput { loss, artifacts, grads })
}

/// Commits a processed batch: writes both endpoints' new states, records
/// the interactions into the history index, and refreshes the sequence
/// model incrementally.
pub fn commit_batch(
    batch: &[Interaction],
    output: &BatchOutput,
    states: &mut StateStore,
    index: &mut HistoryIndex,
    seq_model: &mut SequenceEmbeddingModel,
) -> Result<()> {
    debug_assert_eq!(batch.len(), output.artifacts.len());
    for (s, art) in batch.iter().zip(&output.artifacts) {
        states.set(NodeRef::user(s.user), art.user_after.clone(), s.timestamp);
        states.set(NodeRef::item(s.item), art.item_after.clone(), s.timestamp);
    }
    for s in batch {
        index.record_interaction(s)?;
    }
    seq_model.incremental_update(batch);
    Ok(())
}

/// The complete evolving state of a session: everything a checkpoint
/// captures.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub params: ModelParameters,
    pub optimizer: Adam,
    pub states: StateStore,
    pub index: HistoryIndex,
    pub seq_model: SequenceEmbeddingModel,
    pub stats: DatasetStats,
    pub rng: ChaCha20Rng,
}

/// Per-run training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean per-interaction loss of each epoch.
    pub epoch_mean_losses: Vec<f64>,
    pub batch_count: usize,
}

pub(crate) fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SCHEDULER_SEED_TAG: u64 = 0x5C4E_D01E;
const EPOCH_SEED_TAG: u64 = 0xE90C_0000;

/// Builds the batch schedule for a training slice: full-history relation
/// graphs drive the neighbor-aware assignment. Also returns the neighbor
/// map so batch processing can verify the schedule's guarantees.
pub fn build_schedule_with_map(
    net: &TemporalInteractionNetwork,
    train_slice: &[Interaction],
    hyper: &HyperParams,
) -> Result<(BatchSchedule, NeighborMap)> {
    let full_index =
        HistoryIndex::from_slice(train_slice, net.user_count(), net.item_count())?;
    let map = if hyper.ablation.use_neighbors {
        let mining = MiningParams::from(hyper);
        let model = if mining.use_sequence {
            let corpus = Corpus::from_interactions(train_slice, net.user_count(), net.item_count());
            SequenceEmbeddingModel::fit_initial(
                &corpus,
                hyper.seq_dim,
                SeqTrainConfig::from(hyper),
                derive_seed(hyper.seed, SCHEDULER_SEED_TAG),
            )?
        } else {
            SequenceEmbeddingModel::new(hyper.seq_dim, SeqTrainConfig::from(hyper), 0)
        };
        let now = train_slice.last().map(|s| s.timestamp).unwrap_or(0.0);
        scheduler_neighbor_map(&full_index, &model, &mining, now)?
    } else {
        NeighborMap::new(net.user_count(), net.item_count())
    };
    Ok((tn_batch(train_slice, &map), map))
}

pub fn build_schedule(
    net: &TemporalInteractionNetwork,
    train_slice: &[Interaction],
    hyper: &HyperParams,
) -> Result<BatchSchedule> {
    build_schedule_with_map(net, train_slice, hyper).map(|(s, _)| s)
}

/// Runs the full training loop: one schedule, `epochs` epochs with per-
/// epoch state resets, one optimizer step per batch.
pub fn train(
    net: &TemporalInteractionNetwork,
    train_slice: &[Interaction],
    hyper: &HyperParams,
) -> Result<(ModelState, TrainReport)> {
    hyper.validate()?;
    if train_slice.is_empty() {
        return Err(Error::Empty("train split"));
    }
    let stats = compute_stats(train_slice, net.user_count(), net.item_count());
    let mut rng = ChaCha20Rng::seed_from_u64(hyper.seed);
    let mut params = ModelParameters::init(hyper, &mut rng);
    let mut optimizer = Adam::new(params.values.len());

    let (schedule, neighbor_map) = build_schedule_with_map(net, train_slice, hyper)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(hyper.resolved_workers())
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;

    let seq_cfg = SeqTrainConfig::from(hyper);
    let mut states = StateStore::new(hyper.embedding_dim, net.user_count(), net.item_count());
    let mut index = HistoryIndex::new(net.user_count(), net.item_count());
    let mut seq_model = SequenceEmbeddingModel::new(hyper.seq_dim, seq_cfg, hyper.seed);
    let mut epoch_mean_losses = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        states.reset();
        index = HistoryIndex::new(net.user_count(), net.item_count());
        seq_model = SequenceEmbeddingModel::new(
            hyper.seq_dim,
            seq_cfg,
            derive_seed(hyper.seed, EPOCH_SEED_TAG + epoch as u64),
        );
        let mut loss_sum = 0.0;
        for batch in &schedule.batches {
            let output = pool.install(|| {
                process_batch(
                    batch,
                    &params,
                    &states,
                    &index,
                    &seq_model,
                    hyper,
                    &stats,
                    true,
                    Some(&neighbor_map),
                )
            })?;
            let grads = output.grads.as_ref().expect("gradients requested");
            optimizer.step(&mut params.values, grads, hyper.learning_rate)?;
            commit_batch(batch, &output, &mut states, &mut index, &mut seq_model)?;
            loss_sum += output.loss;
        }
        let mean = loss_sum / train_slice.len() as f64;
        log::info!("epoch {epoch}: mean loss {mean:.6}");
        epoch_mean_losses.push(mean);
    }

    Ok((
        ModelState { params, optimizer, states, index, seq_model, stats, rng },
        TrainReport { epoch_mean_losses, batch_count: schedule.batch_count() },
    ))
}
