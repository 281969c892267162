//! Embedding engine for temporal interaction networks.
//!
//! A temporal interaction network is a time-ordered stream of (user, item,
//! timestamp) events. This crate learns dynamic user and item embeddings
//! from such a stream: for every interaction it mines a local relation
//! graph around each interacting node (historical partners, co-interaction
//! partners within a time slot, and sequence-similar peers), aggregates the
//! neighbor states with hierarchical attention, and advances the two
//! interacting nodes with a pair of recurrent cells. Training batches are
//! scheduled so that interactions inside one batch never touch a common
//! node or neighbor, which makes within-batch processing embarrassingly
//! parallel without changing the sequential semantics.
//!
//! The crate is organized along the pipeline:
//!
//! - [`ingest`]: CSV loading, temporal splits, dataset statistics
//! - [`relation`]: history index and the three relation miners
//! - [`seq_embed`]: paragraph-vector sequence embeddings (PV-DBOW)
//! - [`tape`]: minimal reverse-mode autodiff used by the model
//! - [`params`]: flat parameter store and layout
//! - [`aggregator`]: intra- and inter-relation attention
//! - [`dynamics`]: paired recurrent cells and the time-interval encoder
//! - [`batching`]: dependency-aware batch scheduling
//! - [`trainer`]: prediction head, loss, training loop, gradient checks
//! - [`evaluator`]: next-item ranking, MRR / recall@10, online updates
//! - [`checkpoint`]: versioned binary snapshots of a full session
//! - [`pipeline`]: end-to-end runs and the time-slot sweep
//! - [`synth`]: synthetic stream generators for tests and benchmarks

pub mod aggregator;
pub mod batching;
pub mod checkpoint;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod evaluator;
pub mod gradcheck;
pub mod ingest;
pub mod optim;
pub mod params;
pub mod pipeline;
pub mod relation;
pub mod seq_embed;
pub mod synth;
pub mod tape;
pub mod trainer;

pub use config::{Ablation, HyperParams, IntraActivation};
pub use error::{Error, Result};
pub use ingest::{
    DatasetStats, Interaction, NodeKind, NodeRef, SplitSpec, TemporalInteractionNetwork,
};
pub use relation::{
    HistoryIndex, LocalRelationGraph, RelationAttribute, RelationEdge, RelationType,
};
