//! Fixed-input-size feed-forward regressors.
//!
//! A network is a sequence of dense layers `X·W + b` with an elementwise
//! activation each; inputs are rows, so a whole batch evaluates as one
//! matrix product per layer.

use ndarray::Array2;

use crate::ml::tape::{NodeId, Tape};
use crate::ml::{Activation, MlpSpec, ModelParams};
use crate::{Error, Result};

/// Enter every parameter tensor as a tape leaf, in entry order, so gradient
/// extraction can address parameters by position.
pub fn param_leaves(tape: &mut Tape, params: &ModelParams) -> Vec<NodeId> {
    params
        .entries
        .iter()
        .map(|(_, tensor)| tape.leaf(tensor.clone()))
        .collect()
}

fn activate(tape: &mut Tape, x: NodeId, act: Activation) -> NodeId {
    match act {
        Activation::Relu => tape.relu(x),
        Activation::Sigmoid => tape.sigmoid(x),
        Activation::Linear => x,
    }
}

/// Build the network graph from the batch input node `x` (batch × in);
/// returns the batch × 1 prediction node. `leaves` is the output of
/// [`param_leaves`] for the same spec.
pub fn graph(tape: &mut Tape, spec: &MlpSpec, leaves: &[NodeId], x: NodeId) -> NodeId {
    let mut h = x;
    for (i, &act) in spec.activations.iter().enumerate() {
        let w = leaves[2 * i];
        let b = leaves[2 * i + 1];
        let affine = tape.matmul(h, w);
        let biased = tape.add_bias_row(affine, b);
        h = activate(tape, biased, act);
    }
    h
}

/// Forward pass over a whole batch of feature rows.
pub fn forward_batch(spec: &MlpSpec, params: &ModelParams, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != spec.input_width() {
        return Err(Error::Shape(format!(
            "network expects {} features, batch rows have {}",
            spec.input_width(),
            x.ncols()
        )));
    }
    let mut tape = Tape::new();
    let leaves = param_leaves(&mut tape, params);
    let input = tape.leaf(x.clone());
    let out = graph(&mut tape, spec, &leaves, input);
    Ok(tape.value(out).clone())
}

/// Predicted energy for a single feature vector.
pub fn predict(spec: &MlpSpec, params: &ModelParams, features: &[f64]) -> Result<f64> {
    let x = Array2::from_shape_vec((1, features.len()), features.to_vec())
        .map_err(|e| Error::Shape(e.to_string()))?;
    Ok(forward_batch(spec, params, &x)?[[0, 0]])
}
