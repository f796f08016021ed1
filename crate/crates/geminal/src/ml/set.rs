//! Gated set-attention model over variable-length descriptor spectra.
//!
//! Each descriptor eigenvalue becomes one token of width 1. Two stacked
//! single-head self-attention layers (no positional encoding, no masking)
//! mix the tokens, then the network branches: a per-token dense head whose
//! outputs are summed into a correlation energy, and a gate head whose
//! summed output is squashed to ω ∈ (0,1). The prediction interpolates
//! between the learned energy and the separated-limit estimate:
//!
//! `E_total = (1 − ω)·E_corr + ω·E∞`
//!
//! Sum pooling plus the absence of positional information makes the output
//! exactly invariant under any permutation of the tokens, and the token
//! count is free to vary between samples.

use ndarray::Array2;

use crate::ml::tape::{NodeId, Tape};
use crate::ml::{ModelParams, Sample, SetModelSpec};
use crate::{Error, Result};

/// Scalar outputs of one forward evaluation.
#[derive(Copy, Clone, Debug)]
pub struct SetOutput {
    pub e_total: f64,
    pub omega: f64,
    pub e_corr: f64,
}

/// Graph handles to the three scalar outputs, for building training losses.
#[derive(Copy, Clone, Debug)]
pub struct SetGraph {
    pub e_total: NodeId,
    pub omega: NodeId,
    pub e_corr: NodeId,
}

/// One single-head self-attention layer:
/// `softmax((XW_Q)(XW_K)ᵀ / √d_k) · (XW_V)`.
pub fn attention_layer(
    tape: &mut Tape,
    x: NodeId,
    wq: NodeId,
    wk: NodeId,
    wv: NodeId,
    d_k: usize,
) -> NodeId {
    let q = tape.matmul(x, wq);
    let k = tape.matmul(x, wk);
    let v = tape.matmul(x, wv);
    let scores = tape.matmul_nt(q, k);
    let scaled = tape.scale(scores, 1.0 / (d_k as f64).sqrt());
    let weights = tape.softmax_rows(scaled);
    tape.matmul(weights, v)
}

/// Build the full model graph from a `T × 1` token leaf. `leaves` is the
/// parameter-leaf list in entry order and `e_infinity` enters as a constant.
pub fn graph(
    tape: &mut Tape,
    spec: &SetModelSpec,
    leaves: &[NodeId],
    tokens: NodeId,
    e_infinity: f64,
) -> SetGraph {
    let mut h = tokens;
    let mut off = 0;
    for _ in 0..spec.n_attention_layers {
        h = attention_layer(
            tape,
            h,
            leaves[off],
            leaves[off + 1],
            leaves[off + 2],
            spec.d_k,
        );
        off += 3;
    }

    // correlation pathway: dense stack, linear token readout, sum pooling
    let mut c = h;
    for _ in &spec.corr_head_widths {
        let affine = tape.matmul(c, leaves[off]);
        let biased = tape.add_bias_row(affine, leaves[off + 1]);
        c = tape.relu(biased);
        off += 2;
    }
    let readout = tape.matmul(c, leaves[off]);
    let per_token = tape.add_bias_row(readout, leaves[off + 1]);
    off += 2;
    let e_corr = tape.sum_all(per_token);

    // gate pathway: dense stack, then sum of all values through a sigmoid
    let mut g = h;
    for _ in &spec.gate_widths {
        let affine = tape.matmul(g, leaves[off]);
        let biased = tape.add_bias_row(affine, leaves[off + 1]);
        g = tape.relu(biased);
        off += 2;
    }
    let gate_sum = tape.sum_all(g);
    let omega = tape.sigmoid(gate_sum);

    // E_total = (1 − ω)·E_corr + ω·E∞
    let one = tape.leaf(Array2::from_elem((1, 1), 1.0));
    let one_minus = tape.sub(one, omega);
    let learned = tape.mul(one_minus, e_corr);
    let anchored = tape.scale(omega, e_infinity);
    let e_total = tape.add(learned, anchored);

    SetGraph {
        e_total,
        omega,
        e_corr,
    }
}

/// Tokens of a sample: the feature vector as a `T × 1` column.
pub fn tokens_of(sample: &Sample) -> Result<Array2<f64>> {
    if sample.features.is_empty() {
        return Err(Error::Shape("a sample needs at least one feature".into()));
    }
    Ok(Array2::from_shape_vec(
        (sample.features.len(), 1),
        sample.features.clone(),
    )
    .expect("length matches by construction"))
}

/// Evaluate the model on one sample. `gate_override` replaces the learned ω
/// in the output equation (the gate identities used by tests); `None` uses
/// the gate network.
pub fn forward(
    spec: &SetModelSpec,
    params: &ModelParams,
    sample: &Sample,
    gate_override: Option<f64>,
) -> Result<SetOutput> {
    let mut tape = Tape::new();
    let leaves: Vec<NodeId> = params
        .entries
        .iter()
        .map(|(_, tensor)| tape.leaf(tensor.clone()))
        .collect();
    let tokens = tokens_of(sample)?;
    let token_leaf = tape.leaf(tokens);
    let g = graph(&mut tape, spec, &leaves, token_leaf, sample.e_infinity);
    let e_corr = tape.scalar(g.e_corr);
    let omega = match gate_override {
        Some(w) => w,
        None => tape.scalar(g.omega),
    };
    let e_total = match gate_override {
        Some(w) => (1.0 - w) * e_corr + w * sample.e_infinity,
        None => tape.scalar(g.e_total),
    };
    Ok(SetOutput {
        e_total,
        omega,
        e_corr,
    })
}
