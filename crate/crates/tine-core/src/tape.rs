//! Minimal reverse-mode automatic differentiation over `f64` vectors.
//!
//! The tape evaluates eagerly: every constructor computes its value
//! immediately and records the operation. `backward` then replays the
//! recorded operations in reverse, accumulating parameter gradients
//! directly into a flat buffer aligned with [`crate::params::ModelParameters`].
//! Construction order is a topological order, so the reverse sweep needs
//! no explicit sorting.
//!
//! Scalars are length-1 vectors; `concat`/`pick` convert between grouped
//! scalar collections and vectors, which is how neighbor-wise softmaxes
//! are expressed.

use crate::params::{MatRef, VecRef};

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(VecRef),
    MatVec { m: MatRef, x: NodeId },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale { v: NodeId, s: NodeId },
    MulConst { x: NodeId, c: f64 },
    Concat(Vec<NodeId>),
    Pick { x: NodeId, i: usize },
    Dot(NodeId, NodeId),
    Softmax(NodeId),
    Sigmoid(NodeId),
    LeakyRelu { x: NodeId, slope: f64 },
    Elu(NodeId),
    Norm2(NodeId),
    Norm2Sq(NodeId),
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

/// A recording of one forward computation against a parameter buffer.
pub struct Tape<'p> {
    params: &'p [f64],
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id].value.len(), 1);
        self.nodes[id].value[0]
    }

    pub fn len(&self, id: NodeId) -> usize {
        self.nodes[id].value.len()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Const)
    }

    pub fn constant_scalar(&mut self, value: f64) -> NodeId {
        self.push(vec![value], Op::Const)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.push(vec![0.0; len], Op::Const)
    }

    /// Leaf over a parameter range; gradients accumulate into that range.
    pub fn param(&mut self, v: VecRef) -> NodeId {
        let value = self.params[v.offset..v.offset + v.len].to_vec();
        self.push(value, Op::Param(v))
    }

    /// `y = M x` with `M` taken from the parameter buffer.
    pub fn matvec(&mut self, m: MatRef, x: NodeId) -> NodeId {
        assert_eq!(self.len(x), m.cols, "matvec operand length");
        let xv = &self.nodes[x].value;
        let mut y = vec![0.0; m.rows];
        for i in 0..m.rows {
            let row = &self.params[m.offset + i * m.cols..m.offset + (i + 1) * m.cols];
            y[i] = row.iter().zip(xv.iter()).map(|(w, v)| w * v).sum();
        }
        self.push(y, Op::MatVec { m, x })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b));
        let value = self.nodes[a]
            .value
            .iter()
            .zip(self.nodes[b].value.iter())
            .map(|(x, y)| x + y)
            .collect();
        self.push(value, Op::Add(a, b))
    }

    /// Sum of several equal-length nodes.
    pub fn add_all(&mut self, ids: &[NodeId]) -> NodeId {
        assert!(!ids.is_empty());
        let mut acc = ids[0];
        for &id in &ids[1..] {
            acc = self.add(acc, id);
        }
        acc
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b));
        let value = self.nodes[a]
            .value
            .iter()
            .zip(self.nodes[b].value.iter())
            .map(|(x, y)| x - y)
            .collect();
        self.push(value, Op::Sub(a, b))
    }

    /// Elementwise product of equal-length nodes.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b));
        let value = self.nodes[a]
            .value
            .iter()
            .zip(self.nodes[b].value.iter())
            .map(|(x, y)| x * y)
            .collect();
        self.push(value, Op::Mul(a, b))
    }

    /// Vector times scalar node.
    pub fn scale(&mut self, v: NodeId, s: NodeId) -> NodeId {
        assert_eq!(self.len(s), 1);
        let sv = self.nodes[s].value[0];
        let value = self.nodes[v].value.iter().map(|x| x * sv).collect();
        self.push(value, Op::Scale { v, s })
    }

    pub fn mul_const(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.nodes[x].value.iter().map(|v| v * c).collect();
        self.push(value, Op::MulConst { x, c })
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut value = Vec::new();
        for &p in parts {
            value.extend_from_slice(&self.nodes[p].value);
        }
        self.push(value, Op::Concat(parts.to_vec()))
    }

    /// Extracts one entry as a scalar node.
    pub fn pick(&mut self, x: NodeId, i: usize) -> NodeId {
        assert!(i < self.len(x));
        let value = vec![self.nodes[x].value[i]];
        self.push(value, Op::Pick { x, i })
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b));
        let value: f64 = self.nodes[a]
            .value
            .iter()
            .zip(self.nodes[b].value.iter())
            .map(|(x, y)| x * y)
            .sum();
        self.push(vec![value], Op::Dot(a, b))
    }

    /// Numerically stable softmax along the whole vector.
    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let xv = &self.nodes[x].value;
        let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let value = exps.into_iter().map(|e| e / sum).collect();
        self.push(value, Op::Softmax(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x].value.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
        self.push(value, Op::Sigmoid(x))
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        let value = self.nodes[x]
            .value
            .iter()
            .map(|&v| if v > 0.0 { v } else { slope * v })
            .collect();
        self.push(value, Op::LeakyRelu { x, slope })
    }

    pub fn elu(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x]
            .value
            .iter()
            .map(|&v| if v > 0.0 { v } else { v.exp() - 1.0 })
            .collect();
        self.push(value, Op::Elu(x))
    }

    /// Euclidean norm, a scalar node.
    pub fn norm2(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x].value.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.push(vec![value], Op::Norm2(x))
    }

    /// Squared Euclidean norm, a scalar node.
    pub fn norm2_sq(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x].value.iter().map(|v| v * v).sum::<f64>();
        self.push(vec![value], Op::Norm2Sq(x))
    }

    /// Reverse sweep from a scalar root. Parameter gradients accumulate
    /// into `grads`, which must have the same length as the parameter
    /// buffer.
    pub fn backward(&self, root: NodeId, grads: &mut [f64]) {
        assert_eq!(self.nodes[root].value.len(), 1, "backward root must be scalar");
        assert_eq!(grads.len(), self.params.len());
        let mut adjoint: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoint[root] = Some(vec![1.0]);
        for id in (0..=root).rev() {
            let Some(g) = adjoint[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Const => {}
                Op::Param(v) => {
                    for (slot, gi) in grads[v.offset..v.offset + v.len].iter_mut().zip(&g) {
                        *slot += gi;
                    }
                }
                Op::MatVec { m, x } => {
                    let xv = &self.nodes[*x].value;
                    for i in 0..m.rows {
                        let gi = g[i];
                        let row = m.offset + i * m.cols;
                        for j in 0..m.cols {
                            grads[row + j] += gi * xv[j];
                        }
                    }
                    let acc = acc_slot(&mut adjoint, *x, m.cols);
                    for j in 0..m.cols {
                        let mut s = 0.0;
                        for i in 0..m.rows {
                            s += self.params[m.offset + i * m.cols + j] * g[i];
                        }
                        acc[j] += s;
                    }
                }
                Op::Add(a, b) => {
                    add_into(&mut adjoint, *a, &g);
                    add_into(&mut adjoint, *b, &g);
                }
                Op::Sub(a, b) => {
                    add_into(&mut adjoint, *a, &g);
                    let acc = acc_slot(&mut adjoint, *b, g.len());
                    for (slot, gi) in acc.iter_mut().zip(&g) {
                        *slot -= gi;
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let da: Vec<f64> = g.iter().zip(bv).map(|(gi, y)| gi * y).collect();
                    let db: Vec<f64> = g.iter().zip(av).map(|(gi, x)| gi * x).collect();
                    add_into(&mut adjoint, *a, &da);
                    add_into(&mut adjoint, *b, &db);
                }
                Op::Scale { v, s } => {
                    let sv = self.nodes[*s].value[0];
                    let vv = &self.nodes[*v].value;
                    let dv: Vec<f64> = g.iter().map(|gi| gi * sv).collect();
                    let ds: f64 = g.iter().zip(vv).map(|(gi, x)| gi * x).sum();
                    add_into(&mut adjoint, *v, &dv);
                    add_into(&mut adjoint, *s, &[ds]);
                }
                Op::MulConst { x, c } => {
                    let dx: Vec<f64> = g.iter().map(|gi| gi * c).collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::Concat(parts) => {
                    let mut cursor = 0;
                    for &p in parts {
                        let len = self.nodes[p].value.len();
                        add_into(&mut adjoint, p, &g[cursor..cursor + len]);
                        cursor += len;
                    }
                }
                Op::Pick { x, i } => {
                    let acc = acc_slot(&mut adjoint, *x, self.nodes[*x].value.len());
                    acc[*i] += g[0];
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let da: Vec<f64> = bv.iter().map(|y| g[0] * y).collect();
                    let db: Vec<f64> = av.iter().map(|x| g[0] * x).collect();
                    add_into(&mut adjoint, *a, &da);
                    add_into(&mut adjoint, *b, &db);
                }
                Op::Softmax(x) => {
                    let y = &self.nodes[id].value;
                    let inner: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    let dx: Vec<f64> = g.iter().zip(y).map(|(gi, yi)| yi * (gi - inner)).collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::Sigmoid(x) => {
                    let y = &self.nodes[id].value;
                    let dx: Vec<f64> =
                        g.iter().zip(y).map(|(gi, yi)| gi * yi * (1.0 - yi)).collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::LeakyRelu { x, slope } => {
                    let xv = &self.nodes[*x].value;
                    let dx: Vec<f64> = g
                        .iter()
                        .zip(xv)
                        .map(|(gi, &v)| if v > 0.0 { *gi } else { gi * slope })
                        .collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::Elu(x) => {
                    let xv = &self.nodes[*x].value;
                    let y = &self.nodes[id].value;
                    let dx: Vec<f64> = g
                        .iter()
                        .zip(xv.iter().zip(y))
                        .map(|(gi, (&v, &yi))| if v > 0.0 { *gi } else { gi * (yi + 1.0) })
                        .collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::Norm2(x) => {
                    let xv = &self.nodes[*x].value;
                    let norm = self.nodes[id].value[0].max(1e-12);
                    let dx: Vec<f64> = xv.iter().map(|v| g[0] * v / norm).collect();
                    add_into(&mut adjoint, *x, &dx);
                }
                Op::Norm2Sq(x) => {
                    let xv = &self.nodes[*x].value;
                    let dx: Vec<f64> = xv.iter().map(|v| 2.0 * g[0] * v).collect();
                    add_into(&mut adjoint, *x, &dx);
                }
            }
        }
    }
}

fn acc_slot(adjoint: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    adjoint[id].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(adjoint: &mut [Option<Vec<f64>>], id: NodeId, g: &[f64]) {
    let acc = acc_slot(adjoint, id, g.len());
    for (slot, gi) in acc.iter_mut().zip(g) {
        *slot += gi;
    }
}
