use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation applied to each intra-relation attention head output.
///
/// `Softmax` normalizes the pooled vector along the embedding dimension;
/// `Elu` is the conventional GAT choice and is kept as an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntraActivation {
    Softmax,
    Elu,
}

/// Switches that disable individual components of the model.
///
/// All default to `true` (the full model). Disabling a relation type drops
/// that miner; the corresponding row of the stacked relation embeddings
/// stays zero so shapes never change. `use_attention = false` replaces the
/// learned attention coefficients with uniform weights, and
/// `use_neighbors = false` zeroes the neighbor-based embedding everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub use_historical: bool,
    pub use_common: bool,
    pub use_sequence: bool,
    pub use_attention: bool,
    pub use_neighbors: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            use_historical: true,
            use_common: true,
            use_sequence: true,
            use_attention: true,
            use_neighbors: true,
        }
    }
}

/// All tunable knobs of the model and training run.
///
/// Defaults follow the reference experimental setup: 120-dimensional
/// dynamic embeddings, 3 attention heads, similarity threshold 0.5, a
/// 3-day co-interaction window, Adam at 1e-3 for 50 epochs, and
/// 100-dimensional sequence embeddings with a window of 5.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Dimension `d` of dynamic user/item embeddings.
    pub embedding_dim: usize,
    /// Number of intra-relation attention heads `K`.
    pub attention_heads: usize,
    /// Shared dimension of the inter-relation query/key/value projections.
    /// When absent, `embedding_dim / attention_heads` is used.
    pub attention_dim: Option<usize>,
    /// Cosine threshold for sequence-similarity relations (strict `>`).
    pub similarity_threshold: f64,
    /// Time slot `T` (seconds) for common-interaction mining.
    pub common_window_secs: f64,
    /// Scale of the user-drift regularizer.
    pub lambda_user: f64,
    /// Scale of the item-drift regularizer.
    pub lambda_item: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Dimension of the sequence-based (paragraph vector) embeddings.
    pub seq_dim: usize,
    /// Sliding-window length carried by the sequence model.
    pub seq_window: usize,
    /// Negative samples per target word.
    pub seq_negatives: usize,
    /// Passes over the corpus when fitting the sequence model from scratch.
    pub seq_initial_passes: usize,
    /// Passes over touched sentences per incremental refresh.
    pub seq_incremental_passes: usize,
    pub seq_learning_rate: f64,
    /// Candidate pool size for similarity mining: the most recently active
    /// same-kind nodes are considered before thresholding.
    pub similarity_candidate_cap: usize,
    pub leaky_relu_slope: f64,
    /// Recurrent truncation length; gradients stop at previous-interaction
    /// embeddings. Recorded for reporting; only length 1 is implemented.
    pub rnn_truncation: usize,
    pub intra_activation: IntraActivation,
    /// Use squared L2 distances in the loss instead of L2 distances.
    pub squared_loss: bool,
    pub ablation: Ablation,
    pub seed: u64,
    /// Worker threads for within-batch parallelism; 0 means all cores.
    pub workers: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            embedding_dim: 120,
            attention_heads: 3,
            attention_dim: None,
            similarity_threshold: 0.5,
            common_window_secs: 3.0 * 86_400.0,
            lambda_user: 1.0,
            lambda_item: 1.0,
            learning_rate: 0.001,
            epochs: 50,
            seq_dim: 100,
            seq_window: 5,
            seq_negatives: 5,
            seq_initial_passes: 20,
            seq_incremental_passes: 5,
            seq_learning_rate: 0.025,
            similarity_candidate_cap: 500,
            leaky_relu_slope: 0.2,
            rnn_truncation: 1,
            intra_activation: IntraActivation::Softmax,
            squared_loss: false,
            ablation: Ablation::default(),
            seed: 0,
            workers: 0,
        }
    }
}

impl HyperParams {
    /// Resolved query/key/value dimension.
    pub fn resolved_attention_dim(&self) -> usize {
        self.attention_dim
            .unwrap_or_else(|| (self.embedding_dim / self.attention_heads).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        }
        if self.embedding_dim == 0 {
            return Err(Error::InvalidConfig("embedding_dim must be >= 1".into()));
        }
        if self.attention_heads == 0 {
            return Err(Error::InvalidConfig("attention_heads must be >= 1".into()));
        }
        if self.resolved_attention_dim() == 0 {
            return Err(Error::InvalidConfig("attention_dim must be >= 1".into()));
        }
        if self.seq_dim == 0 {
            return Err(Error::InvalidConfig("seq_dim must be >= 1".into()));
        }
        positive("similarity_threshold", self.similarity_threshold)?;
        positive("common_window_secs", self.common_window_secs)?;
        positive("learning_rate", self.learning_rate)?;
        positive("seq_learning_rate", self.seq_learning_rate)?;
        positive("leaky_relu_slope", self.leaky_relu_slope)?;
        if !(self.lambda_user >= 0.0 && self.lambda_user.is_finite()) {
            return Err(Error::InvalidConfig("lambda_user must be >= 0".into()));
        }
        if !(self.lambda_item >= 0.0 && self.lambda_item.is_finite()) {
            return Err(Error::InvalidConfig("lambda_item must be >= 0".into()));
        }
        if self.rnn_truncation != 1 {
            return Err(Error::InvalidConfig(
                "only rnn_truncation = 1 is supported".into(),
            ));
        }
        if self.similarity_candidate_cap == 0 {
            return Err(Error::InvalidConfig(
                "similarity_candidate_cap must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Effective worker count for within-batch parallelism.
    pub fn resolved_workers(&self) -> usize {
        if self.workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.workers
        }
    }
}
