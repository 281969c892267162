//! Flat parameter storage and layout.
//!
//! Every trainable weight lives in one `Vec<f64>`; the layout maps named
//! matrices and vectors to ranges of that buffer. Gradients, Adam moments,
//! and finite-difference probes all reuse the same flat indexing, which
//! keeps the optimizer and the gradient checker trivial.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::config::HyperParams;

/// A matrix stored row-major inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatRef {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MatRef {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }
}

/// A vector stored inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VecRef {
    pub offset: usize,
    pub len: usize,
}

/// Named ranges of the flat parameter buffer.
///
/// Fields follow the model structure: per-head input projections shared by
/// all relation types, per-(relation, head) intra-attention vectors, the
/// shared relation-attribute scorer, inter-relation query/key/value/output
/// projections, the two recurrent cells with the shared time encoder, the
/// prediction head, and the two cold-start embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub dim: usize,
    pub heads: usize,
    pub attn_dim: usize,
    /// Input projection per head, `dim x dim`.
    pub w_in: Vec<MatRef>,
    /// Attention vector per relation slot and head, length `2 * dim`.
    pub w_intra: Vec<Vec<VecRef>>,
    /// Relation-attribute scorer: weight (length 2) and bias (length 1).
    pub w_feat: VecRef,
    pub b_feat: VecRef,
    /// Inter-relation projections, `attn_dim x dim` each.
    pub w_query: MatRef,
    pub w_key: MatRef,
    pub w_value: MatRef,
    /// Output projection `dim x (3 * attn_dim)` and bias.
    pub w_out: MatRef,
    pub b_out: VecRef,
    /// User cell weights W1..W4, `dim x dim` each.
    pub user_cell: [MatRef; 4],
    /// Item cell weights W1..W4.
    pub item_cell: [MatRef; 4],
    /// Shared time encoder: `dim x 1` weight and `dim` bias.
    pub w_time: MatRef,
    pub b_time: VecRef,
    /// Prediction head.
    pub head_w1: MatRef,
    pub head_w2: MatRef,
    pub head_b: VecRef,
    /// Shared cold-start embeddings, trainable.
    pub init_user: VecRef,
    pub init_item: VecRef,
    pub total: usize,
    segments: Vec<(String, usize, usize)>,
}

impl ParamLayout {
    pub fn new(dim: usize, heads: usize, attn_dim: usize) -> Self {
        let mut cursor = 0usize;
        let mut segments = Vec::new();
        let mut mat = |name: String, rows: usize, cols: usize| {
            let m = MatRef { offset: cursor, rows, cols };
            segments.push((name, cursor, rows * cols));
            cursor += rows * cols;
            m
        };
        let w_in = (0..heads).map(|k| mat(format!("w_in[{k}]"), dim, dim)).collect();
        let mut w_intra = Vec::new();
        for r in 0..3 {
            let mut per_head = Vec::new();
            for k in 0..heads {
                let m = mat(format!("w_intra[{r}][{k}]"), 1, 2 * dim);
                per_head.push(VecRef { offset: m.offset, len: m.len() });
            }
            w_intra.push(per_head);
        }
        let w_feat_m = mat("w_feat".into(), 1, 2);
        let b_feat_m = mat("b_feat".into(), 1, 1);
        let w_query = mat("w_query".into(), attn_dim, dim);
        let w_key = mat("w_key".into(), attn_dim, dim);
        let w_value = mat("w_value".into(), attn_dim, dim);
        let w_out = mat("w_out".into(), dim, 3 * attn_dim);
        let b_out_m = mat("b_out".into(), dim, 1);
        let user_cell =
            std::array::from_fn(|i| mat(format!("user_cell.w{}", i + 1), dim, dim));
        let item_cell =
            std::array::from_fn(|i| mat(format!("item_cell.w{}", i + 1), dim, dim));
        let w_time = mat("w_time".into(), dim, 1);
        let b_time_m = mat("b_time".into(), dim, 1);
        let head_w1 = mat("head.w1".into(), dim, dim);
        let head_w2 = mat("head.w2".into(), dim, dim);
        let head_b_m = mat("head.b".into(), dim, 1);
        let init_user_m = mat("init_user".into(), dim, 1);
        let init_item_m = mat("init_item".into(), dim, 1);
        let as_vec = |m: MatRef| VecRef { offset: m.offset, len: m.len() };
        Self {
            dim,
            heads,
            attn_dim,
            w_in,
            w_intra,
            w_feat: as_vec(w_feat_m),
            b_feat: as_vec(b_feat_m),
            w_query,
            w_key,
            w_value,
            w_out,
            b_out: as_vec(b_out_m),
            user_cell,
            item_cell,
            w_time,
            b_time: as_vec(b_time_m),
            head_w1,
            head_w2,
            head_b: as_vec(head_b_m),
            init_user: as_vec(init_user_m),
            init_item: as_vec(init_item_m),
            total: cursor,
            segments,
        }
    }

    pub fn from_hyper(h: &HyperParams) -> Self {
        Self::new(h.embedding_dim, h.attention_heads, h.resolved_attention_dim())
    }

    /// Human-readable location of a flat index, for diagnostics.
    pub fn name_of(&self, flat: usize) -> String {
        for (name, offset, len) in &self.segments {
            if flat >= *offset && flat < offset + len {
                return format!("{name}[{}]", flat - offset);
            }
        }
        format!("<out of range {flat}>")
    }
}

/// The full trainable state: layout plus values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl ModelParameters {
    /// Random initialization: matrices and attention vectors uniform in
    /// +-1/sqrt(fan_in), biases zero, cold-start embeddings uniform in
    /// +-1/sqrt(dim).
    pub fn init(hyper: &HyperParams, rng: &mut ChaCha20Rng) -> Self {
        let layout = ParamLayout::from_hyper(hyper);
        let mut values = vec![0.0; layout.total];
        let fill_mat = |values: &mut Vec<f64>, m: MatRef, rng: &mut ChaCha20Rng| {
            let bound = 1.0 / (m.cols as f64).sqrt();
            for i in 0..m.len() {
                values[m.offset + i] = rng.gen_range(-bound..bound);
            }
        };
        let fill_vec = |values: &mut Vec<f64>, v: VecRef, fan_in: usize, rng: &mut ChaCha20Rng| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for i in 0..v.len {
                values[v.offset + i] = rng.gen_range(-bound..bound);
            }
        };
        for k in 0..layout.heads {
            fill_mat(&mut values, layout.w_in[k], rng);
        }
        for r in 0..3 {
            for k in 0..layout.heads {
                fill_vec(&mut values, layout.w_intra[r][k], 2 * layout.dim, rng);
            }
        }
        fill_vec(&mut values, layout.w_feat, 2, rng);
        fill_mat(&mut values, layout.w_query, rng);
        fill_mat(&mut values, layout.w_key, rng);
        fill_mat(&mut values, layout.w_value, rng);
        fill_mat(&mut values, layout.w_out, rng);
        for i in 0..4 {
            fill_mat(&mut values, layout.user_cell[i], rng);
        }
        for i in 0..4 {
            fill_mat(&mut values, layout.item_cell[i], rng);
        }
        fill_mat(&mut values, layout.w_time, rng);
        fill_mat(&mut values, layout.head_w1, rng);
        fill_mat(&mut values, layout.head_w2, rng);
        fill_vec(&mut values, layout.init_user, layout.dim, rng);
        fill_vec(&mut values, layout.init_item, layout.dim, rng);
        // b_feat, b_out, b_time, head_b stay zero.
        Self { layout, values }
    }

    pub fn vec(&self, v: VecRef) -> &[f64] {
        &self.values[v.offset..v.offset + v.len]
    }
}
