//! Paired recurrent embedding updates.
//!
//! One cell is shared by all users and one by all items. At an interaction
//! the user's new embedding is a sigmoid of four linear maps: its own
//! previous embedding, the item's previous embedding, its neighbor-based
//! embedding, and the encoded time interval since its previous interaction;
//! the item cell mirrors this with its own weights. The time encoder is a
//! single linear layer shared by both cells, fed the interval scaled by the
//! dataset's mean inter-event gap. Cold nodes use the trainable
//! kind-shared initial embedding and an interval of zero.

use crate::error::{Error, Result};
use crate::ingest::{DatasetStats, NodeKind, NodeRef};
use crate::params::{MatRef, ModelParameters, ParamLayout};
use crate::tape::{NodeId, Tape};

/// Dynamic state of one node after its last interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub embedding: Vec<f64>,
    pub last_time: f64,
}

/// Dynamic embeddings of every node; absent entries are cold nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateStore {
    dim: usize,
    users: Vec<Option<NodeState>>,
    items: Vec<Option<NodeState>>,
}

impl StateStore {
    pub fn new(dim: usize, user_count: usize, item_count: usize) -> Self {
        Self { dim, users: vec![None; user_count], items: vec![None; item_count] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Drops every node back to cold (epoch reset).
    pub fn reset(&mut self) {
        self.users.iter_mut().for_each(|s| *s = None);
        self.items.iter_mut().for_each(|s| *s = None);
    }

    pub fn get(&self, node: NodeRef) -> Option<&NodeState> {
        match node.kind {
            NodeKind::User => self.users[node.index as usize].as_ref(),
            NodeKind::Item => self.items[node.index as usize].as_ref(),
        }
    }

    pub fn set(&mut self, node: NodeRef, embedding: Vec<f64>, time: f64) {
        debug_assert_eq!(embedding.len(), self.dim);
        let slot = match node.kind {
            NodeKind::User => &mut self.users[node.index as usize],
            NodeKind::Item => &mut self.items[node.index as usize],
        };
        *slot = Some(NodeState { embedding, last_time: time });
    }

    /// Current embedding, falling back to the kind's initial embedding for
    /// cold nodes.
    pub fn embedding_or_init<'a>(&'a self, node: NodeRef, params: &'a ModelParameters) -> &'a [f64] {
        match self.get(node) {
            Some(s) => &s.embedding,
            None => match node.kind {
                NodeKind::User => params.vec(params.layout.init_user),
                NodeKind::Item => params.vec(params.layout.init_item),
            },
        }
    }

    pub fn last_time(&self, node: NodeRef) -> Option<f64> {
        self.get(node).map(|s| s.last_time)
    }
}

/// Time-interval encoding subgraph: `W_t * (delta / mean_gap) + b_t`.
pub(crate) fn time_encoding_node(
    tape: &mut Tape,
    layout: &ParamLayout,
    delta: f64,
    mean_gap: f64,
) -> NodeId {
    let scaled = tape.constant(vec![delta / mean_gap]);
    let lin = tape.matvec(layout.w_time, scaled);
    let b = tape.param(layout.b_time);
    tape.add(lin, b)
}

/// One recurrent cell update subgraph:
/// `sigmoid(W1 self_prev + W2 other_prev + W3 h_neighbor + W4 t)`.
pub(crate) fn cell_update_node(
    tape: &mut Tape,
    cell: &[MatRef; 4],
    self_prev: NodeId,
    other_prev: NodeId,
    neighbor_emb: NodeId,
    time_enc: NodeId,
) -> NodeId {
    let a = tape.matvec(cell[0], self_prev);
    let b = tape.matvec(cell[1], other_prev);
    let c = tape.matvec(cell[2], neighbor_emb);
    let d = tape.matvec(cell[3], time_enc);
    let sum = tape.add_all(&[a, b, c, d]);
    tape.sigmoid(sum)
}

/// Encodes a non-negative time interval into a `dim`-vector.
pub fn encode_time_interval(
    delta: f64,
    stats: &DatasetStats,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    if delta < 0.0 {
        return Err(Error::NegativeInterval(delta));
    }
    let mut tape = Tape::new(&params.values);
    let node = time_encoding_node(&mut tape, &params.layout, delta, stats.mean_inter_event_gap);
    Ok(tape.value(node).to_vec())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn cell_update(
    cell: &[MatRef; 4],
    self_prev: &[f64],
    other_prev: &[f64],
    neighbor_emb: &[f64],
    delta: f64,
    stats: &DatasetStats,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    let dim = params.layout.dim;
    check_dim(dim, self_prev.len())?;
    check_dim(dim, other_prev.len())?;
    check_dim(dim, neighbor_emb.len())?;
    if delta < 0.0 {
        return Err(Error::NegativeInterval(delta));
    }
    let mut tape = Tape::new(&params.values);
    let sp = tape.constant(self_prev.to_vec());
    let op = tape.constant(other_prev.to_vec());
    let nb = tape.constant(neighbor_emb.to_vec());
    let t = time_encoding_node(&mut tape, &params.layout, delta, stats.mean_inter_event_gap);
    let out = cell_update_node(&mut tape, cell, sp, op, nb, t);
    Ok(tape.value(out).to_vec())
}

/// User embedding after the current interaction.
pub fn update_user(
    u_prev: &[f64],
    v_prev: &[f64],
    neighbor_emb: &[f64],
    delta_u: f64,
    stats: &DatasetStats,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    cell_update(&params.layout.user_cell, u_prev, v_prev, neighbor_emb, delta_u, stats, params)
}

/// Item embedding after the current interaction; mirror of [`update_user`]
/// with the item cell's parameters.
pub fn update_item(
    v_prev: &[f64],
    u_prev: &[f64],
    neighbor_emb: &[f64],
    delta_v: f64,
    stats: &DatasetStats,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    cell_update(&params.layout.item_cell, v_prev, u_prev, neighbor_emb, delta_v, stats, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HyperParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn stats(gap: f64) -> DatasetStats {
        DatasetStats { mean_inter_event_gap: gap, user_count: 1, item_count: 1, interaction_count: 1 }
    }

    fn zero_params(dim: usize) -> ModelParameters {
        let layout = ParamLayout::new(dim, 1, 1);
        let values = vec![0.0; layout.total];
        ModelParameters { layout, values }
    }

    fn set_mat(p: &mut ModelParameters, m: MatRef, rows: &[&[f64]]) {
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                p.values[m.offset + i * m.cols + j] = *v;
            }
        }
    }

    #[test]
    fn zero_interval_with_zero_bias_encodes_to_zero() {
        let params = zero_params(3);
        let enc = encode_time_interval(0.0, &stats(5.0), &params).unwrap();
        assert_eq!(enc, vec![0.0; 3]);
    }

    #[test]
    fn interval_equal_to_mean_gap_reads_off_the_weight_column() {
        let mut params = zero_params(2);
        let w_time = params.layout.w_time;
        set_mat(&mut params, w_time, &[&[1.0], &[2.0]]);
        let enc = encode_time_interval(7.5, &stats(7.5), &params).unwrap();
        assert_eq!(enc, vec![1.0, 2.0]);
    }

    #[test]
    fn negative_interval_is_rejected() {
        let params = zero_params(2);
        assert!(matches!(
            encode_time_interval(-1.0, &stats(1.0), &params),
            Err(Error::NegativeInterval(_))
        ));
    }

    #[test]
    fn zero_weights_give_one_half_everywhere() {
        let params = zero_params(4);
        let u = update_user(&[0.1; 4], &[0.2; 4], &[0.3; 4], 2.0, &stats(1.0), &params).unwrap();
        assert_eq!(u, vec![0.5; 4]);
        let v = update_item(&[0.1; 4], &[0.2; 4], &[0.3; 4], 2.0, &stats(1.0), &params).unwrap();
        assert_eq!(v, vec![0.5; 4]);
    }

    #[test]
    fn scalar_cell_matches_direct_sigmoid() {
        // d = 1, all four user weights 1, inputs 0.2 / 0.3 / 0.1 and a time
        // encoding of 0.4 via the bias: sigmoid(1.0).
        let mut params = zero_params(1);
        let cells: Vec<MatRef> = params.layout.user_cell.to_vec();
        for m in cells {
            set_mat(&mut params, m, &[&[1.0]]);
        }
        let b_time = params.layout.b_time;
        params.values[b_time.offset] = 0.4;
        let u = update_user(&[0.2], &[0.3], &[0.1], 0.0, &stats(1.0), &params).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((u[0] - expected).abs() < 1e-15);
        assert!((u[0] - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn item_cell_mirrors_user_cell_bit_for_bit() {
        let hyper = HyperParams { embedding_dim: 3, attention_heads: 1, ..Default::default() };
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut params = ModelParameters::init(&hyper, &mut rng);
        // Copy user-cell weights onto the item cell.
        for i in 0..4 {
            let (u, v) = (params.layout.user_cell[i], params.layout.item_cell[i]);
            let src: Vec<f64> = params.values[u.offset..u.offset + u.len()].to_vec();
            params.values[v.offset..v.offset + v.len()].copy_from_slice(&src);
        }
        let a = [0.2, 0.4, 0.6];
        let b = [0.9, 0.1, 0.5];
        let h = [0.3, 0.3, 0.3];
        let user = update_user(&a, &b, &h, 3.0, &stats(2.0), &params).unwrap();
        let item = update_item(&a, &b, &h, 3.0, &stats(2.0), &params).unwrap();
        assert_eq!(user, item);
    }

    #[test]
    fn cells_share_no_parameters() {
        let hyper = HyperParams { embedding_dim: 2, attention_heads: 1, ..Default::default() };
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut params = ModelParameters::init(&hyper, &mut rng);
        let a = [0.2, 0.4];
        let before = update_item(&a, &a, &a, 1.0, &stats(1.0), &params).unwrap();
        // Scrambling the user cell must not change the item update.
        let u0 = params.layout.user_cell[0];
        for i in 0..u0.len() {
            params.values[u0.offset + i] += 10.0;
        }
        let after = update_item(&a, &a, &a, 1.0, &stats(1.0), &params).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn outputs_stay_in_unit_interval_and_finite() {
        let hyper = HyperParams { embedding_dim: 4, attention_heads: 2, ..Default::default() };
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let params = ModelParameters::init(&hyper, &mut rng);
        // Moderate inputs land strictly inside (0, 1).
        for trial in 0..50 {
            let x = vec![(trial as f64 * 17.3).sin(); 4];
            let y = vec![(trial as f64 * 3.1).cos(); 4];
            let h = vec![(trial as f64 * 0.7).sin() * 0.5; 4];
            let u = update_user(&x, &y, &h, trial as f64, &stats(10.0), &params).unwrap();
            assert!(u.iter().all(|&e| e > 0.0 && e < 1.0));
        }
        // Extreme inputs saturate the sigmoid but never leave [0, 1] or
        // produce non-finite values.
        let big = vec![1e6; 4];
        let u = update_user(&big, &big, &big, 1e9, &stats(1.0), &params).unwrap();
        assert!(u.iter().all(|&e| (0.0..=1.0).contains(&e) && e.is_finite()));
    }

    #[test]
    fn state_store_reset_and_fallback() {
        let hyper = HyperParams { embedding_dim: 2, attention_heads: 1, ..Default::default() };
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let params = ModelParameters::init(&hyper, &mut rng);
        let mut store = StateStore::new(2, 2, 2);
        let node = NodeRef::user(1);
        assert_eq!(store.embedding_or_init(node, &params), params.vec(params.layout.init_user));
        store.set(node, vec![0.7, 0.2], 5.0);
        assert_eq!(store.embedding_or_init(node, &params), &[0.7, 0.2]);
        assert_eq!(store.last_time(node), Some(5.0));
        store.reset();
        assert_eq!(store.get(node), None);
    }
}
