//! End-to-end runs: train on the first split, evaluate online on the
//! validation and test splits, and the time-slot sensitivity sweep.

use crate::config::HyperParams;
use crate::error::Result;
use crate::evaluator::{evaluate_online, EvalOptions, EvalOutput};
use crate::ingest::{SplitSpec, TemporalInteractionNetwork};
use crate::trainer::{train, ModelState, TrainReport};

/// Trains on the train split of `spec` and returns the session state.
pub fn train_on_split(
    net: &TemporalInteractionNetwork,
    spec: &SplitSpec,
    hyper: &HyperParams,
) -> Result<(ModelState, TrainReport)> {
    let (train_slice, _, _) = net.temporal_split(spec)?;
    train(net, train_slice, hyper)
}

/// Evaluates a session online on the validation then test splits; updates
/// made during validation persist into the test phase.
pub fn evaluate_splits(
    state: &mut ModelState,
    net: &TemporalInteractionNetwork,
    spec: &SplitSpec,
    hyper: &HyperParams,
    options: &EvalOptions,
) -> Result<(EvalOutput, EvalOutput)> {
    let (_, valid, test) = net.temporal_split(spec)?;
    let valid_out = evaluate_online(state, valid, hyper, &EvalOptions { trace_limit: 0, ..*options })?;
    let test_out = evaluate_online(state, test, hyper, options)?;
    Ok((valid_out, test_out))
}

/// One point of the time-slot sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub common_window_secs: f64,
    pub validation_mrr: f64,
}

/// Trains and validates once per candidate time slot `T`, returning the
/// (T, validation MRR) curve.
pub fn sweep_common_window(
    net: &TemporalInteractionNetwork,
    spec: &SplitSpec,
    hyper: &HyperParams,
    window_values_secs: &[f64],
) -> Result<Vec<SweepPoint>> {
    if window_values_secs.is_empty() {
        return Err(crate::error::Error::Empty("sweep value list"));
    }
    let mut points = Vec::with_capacity(window_values_secs.len());
    for &window in window_values_secs {
        let mut hyper_t = hyper.clone();
        hyper_t.common_window_secs = window;
        hyper_t.validate()?;
        let (train_slice, valid, _) = net.temporal_split(spec)?;
        let (mut state, _) = train(net, train_slice, &hyper_t)?;
        let out = evaluate_online(&mut state, valid, &hyper_t, &EvalOptions::default())?;
        log::info!(
            "sweep T={:.2} days -> validation MRR {:.4}",
            window / 86_400.0,
            out.metrics.mrr
        );
        points.push(SweepPoint { common_window_secs: window, validation_mrr: out.metrics.mrr });
    }
    Ok(points)
}
