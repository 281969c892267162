//! Next-item ranking and online evaluation.
//!
//! The predicted item embedding is compared against the current dynamic
//! embeddings of every item in the universe by L2 distance; the ground
//! truth's rank counts the items strictly closer (optimistic on ties).
//! Evaluation is online: after scoring each interaction the model takes
//! one optimizer step on that interaction's loss, commits the state
//! updates, and refreshes the history index and sequence model, so the
//! model keeps adapting through the evaluation stream.

use serde::Serialize;

use crate::aggregator::AttentionTrace;
use crate::config::HyperParams;
use crate::error::{Error, Result};
use crate::ingest::{Interaction, NodeRef};
use crate::trainer::{commit_batch, process_batch, ModelState};

/// Outcome of ranking one query against the item universe.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    /// 1-based optimistic rank of the ground-truth item.
    pub rank: usize,
    pub truth_distance: f64,
    pub candidates: usize,
}

/// Aggregate evaluation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mrr: f64,
    pub recall_at_10: f64,
    pub samples: usize,
}

/// Attention diagnostics of one evaluated interaction.
#[derive(Debug, Clone, Serialize)]
pub struct InteractionTrace {
    pub seq_index: u32,
    pub user: AttentionTrace,
    pub item: AttentionTrace,
}

/// Evaluation switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Collect attention traces for the first N interactions.
    pub trace_limit: usize,
    /// Skip optimizer steps (frozen-parameter debugging mode); state,
    /// history, and sequence-model updates still happen.
    pub frozen: bool,
}

/// Evaluation result: metrics plus any requested traces.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub metrics: Metrics,
    pub traces: Vec<InteractionTrace>,
}

/// Ranks the ground-truth item among all items by L2 distance to the
/// predicted embedding. Cold items rank with the shared initial embedding.
pub fn rank_items(
    prediction: &[f64],
    state: &ModelState,
    truth_item: u32,
) -> Result<RankingResult> {
    let candidates = state.states.item_count();
    if (truth_item as usize) >= candidates {
        return Err(Error::UnknownNode(format!("item#{truth_item}")));
    }
    let distance = |item: u32| -> f64 {
        let emb = state.states.embedding_or_init(NodeRef::item(item), &state.params);
        prediction
            .iter()
            .zip(emb)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let truth_distance = distance(truth_item);
    let mut closer = 0usize;
    for item in 0..candidates as u32 {
        if item != truth_item && distance(item) < truth_distance {
            closer += 1;
        }
    }
    Ok(RankingResult { rank: closer + 1, truth_distance, candidates })
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of ranks within the top `k`.
pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("recall cutoff must be >= 1".into()));
    }
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

/// Evaluates one split online, mutating the model state as it goes.
pub fn evaluate_online(
    state: &mut ModelState,
    split: &[Interaction],
    hyper: &HyperParams,
    options: &EvalOptions,
) -> Result<EvalOutput> {
    if split.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let mut ranks = Vec::with_capacity(split.len());
    let mut traces = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for s in split {
        debug_assert!(s.timestamp >= last_t, "evaluation stream must be time-ordered");
        last_t = s.timestamp;
        let batch = std::slice::from_ref(s);
        let output = process_batch(
            batch,
            &state.params,
            &state.states,
            &state.index,
            &state.seq_model,
            hyper,
            &state.stats,
            !options.frozen,
            None,
        )?;
        let art = &output.artifacts[0];
        ranks.push(rank_items(&art.prediction, state, s.item)?.rank);
        if traces.len() < options.trace_limit {
            traces.push(InteractionTrace {
                seq_index: s.seq_index,
                user: art.user_trace.clone(),
                item: art.item_trace.clone(),
            });
        }
        if let Some(grads) = &output.grads {
            state.optimizer.step(&mut state.params.values, grads, hyper.learning_rate)?;
        }
        commit_batch(batch, &output, &mut state.states, &mut state.index, &mut state.seq_model)?;
    }
    let metrics = Metrics {
        mrr: mrr(&ranks)?,
        recall_at_10: recall_at_k(&ranks, 10)?,
        samples: ranks.len(),
    };
    Ok(EvalOutput { metrics, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateStore;
    use crate::ingest::DatasetStats;
    use crate::optim::Adam;
    use crate::params::ModelParameters;
    use crate::relation::HistoryIndex;
    use crate::seq_embed::{SeqTrainConfig, SequenceEmbeddingModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_state(dim: usize, items: usize) -> ModelState {
        let hyper = HyperParams {
            embedding_dim: dim,
            attention_heads: 1,
            attention_dim: Some(1),
            seq_dim: 4,
            ..Default::default()
        };
        let params = ModelParameters::init(&hyper, &mut ChaCha20Rng::seed_from_u64(1));
        ModelState {
            optimizer: Adam::new(params.values.len()),
            states: StateStore::new(dim, 2, items),
            index: HistoryIndex::new(2, items),
            seq_model: SequenceEmbeddingModel::new(4, SeqTrainConfig::default(), 0),
            stats: DatasetStats {
                mean_inter_event_gap: 1.0,
                user_count: 2,
                item_count: items,
                interaction_count: 0,
            },
            rng: ChaCha20Rng::seed_from_u64(2),
            params,
        }
    }

    #[test]
    fn unique_minimum_ranks_first() {
        let mut state = toy_state(2, 3);
        state.states.set(NodeRef::item(0), vec![0.9, 0.9], 1.0);
        state.states.set(NodeRef::item(1), vec![0.1, 0.1], 1.0);
        state.states.set(NodeRef::item(2), vec![0.5, 0.9], 1.0);
        let r = rank_items(&[0.1, 0.1], &state, 1).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.truth_distance, 0.0);
        assert_eq!(r.candidates, 3);
    }

    #[test]
    fn rank_counts_strictly_closer_items() {
        // Distances (2, 1, 3) with truth the first item -> rank 2.
        let mut state = toy_state(1, 3);
        state.states.set(NodeRef::item(0), vec![2.0], 1.0);
        state.states.set(NodeRef::item(1), vec![1.0], 1.0);
        state.states.set(NodeRef::item(2), vec![3.0], 1.0);
        let r = rank_items(&[0.0], &state, 0).unwrap();
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn ties_rank_optimistically() {
        let mut state = toy_state(1, 3);
        state.states.set(NodeRef::item(0), vec![1.0], 1.0);
        state.states.set(NodeRef::item(1), vec![1.0], 1.0);
        state.states.set(NodeRef::item(2), vec![5.0], 1.0);
        let r = rank_items(&[0.0], &state, 0).unwrap();
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn unknown_truth_item_is_an_error() {
        let state = toy_state(1, 2);
        assert!(matches!(rank_items(&[0.0], &state, 7), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn mrr_matches_direct_evaluation() {
        assert_eq!(mrr(&[1]).unwrap(), 1.0);
        let v = mrr(&[1, 2, 4]).unwrap();
        assert!((v - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-12);
        assert!(mrr(&[]).is_err());
    }

    #[test]
    fn recall_counts_top_k_fraction() {
        let r = recall_at_k(&[1, 11, 5], 10).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(recall_at_k(&[1, 2, 3], 10).unwrap(), 1.0);
        assert!(recall_at_k(&[], 10).is_err());
    }

    #[test]
    fn recall_is_monotone_in_k() {
        let ranks = [3usize, 8, 15, 1, 22, 9];
        let mut prev = 0.0;
        for k in 1..25 {
            let r = recall_at_k(&ranks, k).unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let mut state = toy_state(2, 2);
        let hyper = HyperParams { embedding_dim: 2, ..Default::default() };
        let err = evaluate_online(&mut state, &[], &hyper, &EvalOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Empty("evaluation split")));
    }
}
