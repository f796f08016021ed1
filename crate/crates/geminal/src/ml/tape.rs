//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records a directed acyclic graph of matrix operations as it
//! evaluates them. Calling [`Tape::backward`] on a scalar (1×1) node then
//! propagates adjoints through the graph in reverse creation order, yielding
//! the exact gradient of that scalar with respect to every node — in
//! particular the leaves holding model parameters.
//!
//! The operation set is deliberately small: just what the feed-forward and
//! set-attention models need. Shapes are checked eagerly at graph build time
//! and violations panic, since they are programming errors rather than user
//! input.

use ndarray::{Array2, Axis};

/// Handle to a node on a [`Tape`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

impl NodeId {
    /// Position of this node in the tape and in [`Tape::backward`]'s output.
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    /// `A · B`
    MatMul(NodeId, NodeId),
    /// `A · Bᵀ`
    MatMulNT(NodeId, NodeId),
    /// `X + b` with the 1×n row `b` broadcast over the rows of `X`.
    AddBiasRow(NodeId, NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    /// Row-wise softmax.
    SoftmaxRows(NodeId),
    /// `c · X` for a constant `c` (not differentiated through).
    Scale(NodeId, f64),
    /// Sum of all entries, producing a 1×1 node.
    SumAll(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product.
    Mul(NodeId, NodeId),
}

struct Node {
    op: Op,
    value: Array2<f64>,
}

/// Growing record of a forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Array2<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Enter a constant or parameter matrix into the graph.
    pub fn leaf(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// The forward value computed at `id`.
    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    /// The forward value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.dim(), (1, 1), "scalar() called on a non-scalar node");
        v[[0, 0]]
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.ncols(), vb.nrows(), "matmul inner dimensions differ");
        let value = va.dot(vb);
        self.push(Op::MatMul(a, b), value)
    }

    /// `A · Bᵀ` without materializing the transpose in the graph.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.ncols(), vb.ncols(), "matmul_nt inner dimensions differ");
        let value = va.dot(&vb.t());
        self.push(Op::MatMulNT(a, b), value)
    }

    /// Broadcast-add a 1×n bias row to every row of `x`.
    pub fn add_bias_row(&mut self, x: NodeId, bias: NodeId) -> NodeId {
        let (vx, vb) = (self.value(x), self.value(bias));
        assert_eq!(vb.nrows(), 1, "bias must be a single row");
        assert_eq!(vx.ncols(), vb.ncols(), "bias width differs from input");
        let value = vx + vb;
        self.push(Op::AddBiasRow(x, bias), value)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).mapv(|v| v.max(0.0));
        self.push(Op::Relu(x), value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(Op::Sigmoid(x), value)
    }

    /// Numerically stable softmax applied independently to each row.
    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum: f64 = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        self.push(Op::SoftmaxRows(x), value)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x) * c;
        self.push(Op::Scale(x, c), value)
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).sum();
        self.push(Op::SumAll(x), Array2::from_elem((1, 1), s))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).dim(), self.value(b).dim(), "add shape mismatch");
        let value = self.value(a) + self.value(b);
        self.push(Op::Add(a, b), value)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).dim(), self.value(b).dim(), "sub shape mismatch");
        let value = self.value(a) - self.value(b);
        self.push(Op::Sub(a, b), value)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).dim(), self.value(b).dim(), "mul shape mismatch");
        let value = self.value(a) * self.value(b);
        self.push(Op::Mul(a, b), value)
    }

    /// Reverse sweep from the scalar node `root`, returning one adjoint per
    /// node in creation order. `grads[leaf.0]` is the gradient of `root`
    /// with respect to that leaf.
    pub fn backward(&self, root: NodeId) -> Vec<Array2<f64>> {
        assert_eq!(
            self.value(root).dim(),
            (1, 1),
            "backward requires a scalar root"
        );
        let mut grads: Vec<Array2<f64>> = self
            .nodes
            .iter()
            .map(|n| Array2::zeros(n.value.dim()))
            .collect();
        grads[root.0][[0, 0]] = 1.0;

        for i in (0..=root.0).rev() {
            // Detach the incoming adjoint so parents can be updated while
            // this node's gradient is read.
            let g = std::mem::replace(&mut grads[i], Array2::zeros((0, 0)));
            match self.nodes[i].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    grads[a.0] = &grads[a.0] + &g.dot(&self.nodes[b.0].value.t());
                    grads[b.0] = &grads[b.0] + &self.nodes[a.0].value.t().dot(&g);
                }
                Op::MatMulNT(a, b) => {
                    grads[a.0] = &grads[a.0] + &g.dot(&self.nodes[b.0].value);
                    grads[b.0] = &grads[b.0] + &g.t().dot(&self.nodes[a.0].value);
                }
                Op::AddBiasRow(x, bias) => {
                    grads[x.0] = &grads[x.0] + &g;
                    let col_sums = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    grads[bias.0] = &grads[bias.0] + &col_sums;
                }
                Op::Relu(x) => {
                    let mask = self.nodes[x.0].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    grads[x.0] = &grads[x.0] + &(&g * &mask);
                }
                Op::Sigmoid(x) => {
                    let s = &self.nodes[i].value;
                    let ds = s * &(1.0 - s);
                    grads[x.0] = &grads[x.0] + &(&g * &ds);
                }
                Op::SoftmaxRows(x) => {
                    // per row: dx = p ∘ (g − ⟨g, p⟩)
                    let p = &self.nodes[i].value;
                    let mut dx = Array2::zeros(p.dim());
                    for r in 0..p.nrows() {
                        let dot: f64 = (0..p.ncols()).map(|c| g[[r, c]] * p[[r, c]]).sum();
                        for c in 0..p.ncols() {
                            dx[[r, c]] = p[[r, c]] * (g[[r, c]] - dot);
                        }
                    }
                    grads[x.0] = &grads[x.0] + &dx;
                }
                Op::Scale(x, c) => {
                    grads[x.0] = &grads[x.0] + &(&g * c);
                }
                Op::SumAll(x) => {
                    let gx = g[[0, 0]];
                    grads[x.0] = &grads[x.0] + gx;
                }
                Op::Add(a, b) => {
                    grads[a.0] = &grads[a.0] + &g;
                    grads[b.0] = &grads[b.0] + &g;
                }
                Op::Sub(a, b) => {
                    grads[a.0] = &grads[a.0] + &g;
                    grads[b.0] = &grads[b.0] - &g;
                }
                Op::Mul(a, b) => {
                    grads[a.0] = &grads[a.0] + &(&g * &self.nodes[b.0].value);
                    grads[b.0] = &grads[b.0] + &(&g * &self.nodes[a.0].value);
                }
            }
            grads[i] = g;
        }
        grads
    }
}
