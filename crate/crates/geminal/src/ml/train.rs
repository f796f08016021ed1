//! Training, fine-tuning, and evaluation.
//!
//! Every function here is a pure function of its arguments: the split, the
//! epoch shuffles, and the parameter initialization all derive from the
//! config seed, so a rerun reproduces the same parameters bit for bit.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ml::adam::Adam;
use crate::ml::tape::Tape;
use crate::ml::{mlp, set, Model, ModelParams, ModelSpec, Sample, MODEL_SCHEMA};
use crate::{Error, Result};

/// Salt so the per-epoch shuffle stream differs from the split shuffle.
const EPOCH_STREAM: u64 = 0x45504f4348u64;

/// Everything a training run needs besides the data.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of samples that become the training split.
    pub split_fraction: f64,
    pub seed: u64,
    /// Layer names (e.g. `layer1`) whose tensors must not move.
    pub frozen_layers: Vec<String>,
    /// Epochs between learning-curve entries (the final epoch is always
    /// recorded); raise this to cheapen long runs.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 2000,
            batch_size: 64,
            split_fraction: 0.8,
            seed: 0,
            frozen_layers: Vec::new(),
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(
                "split fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        Ok(())
    }
}

/// One learning-curve entry.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mae: f64,
    pub test_mae: f64,
}

/// Per-epoch mean absolute errors of a finished run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub curve: Vec<EpochStats>,
}

/// Evaluation summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// `prediction − target` per sample, in input order.
    pub residuals: Vec<f64>,
}

/// Seeded shuffle of `0..n` cut into train/test index lists. Both splits
/// are guaranteed non-empty.
pub fn split_indices(n: usize, split_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Config(
            "split fraction must lie strictly between 0 and 1".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Data(format!(
            "cannot split {n} samples into non-empty train and test sets"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = ((n as f64 * split_fraction).round() as usize).clamp(1, n - 1);
    let test = order.split_off(n_train);
    Ok((order, test))
}

fn batch_features(spec_width: usize, batch: &[&Sample]) -> Result<Array2<f64>> {
    let mut x = Array2::zeros((batch.len(), spec_width));
    for (i, s) in batch.iter().enumerate() {
        if s.features.len() != spec_width {
            return Err(Error::Shape(format!(
                "network expects {} features, sample has {}",
                spec_width,
                s.features.len()
            )));
        }
        for (j, &f) in s.features.iter().enumerate() {
            x[[i, j]] = f;
        }
    }
    Ok(x)
}

/// Build the mean-squared-error graph for one batch; returns the tape, the
/// loss node, and the parameter-leaf ids in entry order.
fn loss_graph(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: &[&Sample],
) -> Result<(Tape, crate::ml::tape::NodeId, Vec<crate::ml::tape::NodeId>)> {
    assert!(!batch.is_empty(), "loss of an empty batch");
    let mut tape = Tape::new();
    let leaves: Vec<_> = params
        .entries
        .iter()
        .map(|(_, t)| tape.leaf(t.clone()))
        .collect();
    let inv = 1.0 / batch.len() as f64;
    let loss = match spec {
        ModelSpec::Mlp(m) => {
            let x = tape.leaf(batch_features(m.input_width(), batch)?);
            let targets = Array2::from_shape_vec(
                (batch.len(), 1),
                batch.iter().map(|s| s.target_energy).collect(),
            )
            .expect("length matches");
            let y = tape.leaf(targets);
            let pred = mlp::graph(&mut tape, m, &leaves, x);
            let diff = tape.sub(pred, y);
            let sq = tape.mul(diff, diff);
            let total = tape.sum_all(sq);
            tape.scale(total, inv)
        }
        ModelSpec::Set(m) => {
            let mut total = None;
            for s in batch {
                let tokens = tape.leaf(set::tokens_of(s)?);
                let out = set::graph(&mut tape, m, &leaves, tokens, s.e_infinity);
                let y = tape.leaf(Array2::from_elem((1, 1), s.target_energy));
                let diff = tape.sub(out.e_total, y);
                let sq = tape.mul(diff, diff);
                total = Some(match total {
                    None => sq,
                    Some(acc) => tape.add(acc, sq),
                });
            }
            let total = total.expect("batch is non-empty");
            tape.scale(total, inv)
        }
    };
    Ok((tape, loss, leaves))
}

/// Mean-squared-error of `params` on `batch`.
pub fn mse_loss(spec: &ModelSpec, params: &ModelParams, batch: &[&Sample]) -> Result<f64> {
    let (tape, loss, _) = loss_graph(spec, params, batch)?;
    Ok(tape.scalar(loss))
}

/// Loss plus exact gradients, one per parameter entry. Entries whose layer
/// appears in `frozen_layers` report a zero gradient.
pub fn mse_loss_and_grads(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: &[&Sample],
    frozen_layers: &[String],
) -> Result<(f64, Vec<Array2<f64>>)> {
    let (tape, loss, leaves) = loss_graph(spec, params, batch)?;
    let all = tape.backward(loss);
    let frozen = params.frozen_mask(frozen_layers);
    let grads = leaves
        .iter()
        .enumerate()
        .map(|(i, id)| {
            if frozen[i] {
                Array2::zeros(params.entries[i].1.dim())
            } else {
                all[id.index()].clone()
            }
        })
        .collect();
    Ok((tape.scalar(loss), grads))
}

fn mae_of(model: &Model, samples: &[&Sample]) -> Result<f64> {
    let mut total = 0.0;
    match &model.spec {
        ModelSpec::Mlp(m) => {
            let x = batch_features(m.input_width(), samples)?;
            let pred = mlp::forward_batch(m, &model.params, &x)?;
            for (i, s) in samples.iter().enumerate() {
                total += (pred[[i, 0]] - s.target_energy).abs();
            }
        }
        ModelSpec::Set(m) => {
            for s in samples {
                let out = set::forward(m, &model.params, s, None)?;
                total += (out.e_total - s.target_energy).abs();
            }
        }
    }
    Ok(total / samples.len() as f64)
}

fn check_frozen_exist(params: &ModelParams, frozen_layers: &[String]) -> Result<()> {
    for name in frozen_layers {
        if !params
            .entries
            .iter()
            .any(|(n, _)| ModelParams::layer_of(n) == name)
        {
            return Err(Error::Config(format!(
                "frozen layer {name:?} does not exist in this model"
            )));
        }
    }
    Ok(())
}

/// Run mini-batch Adam from `start` over explicit train/test index lists.
/// This is the shared core of [`train`] and [`finetune_first_layer`].
fn run_training(
    spec: &ModelSpec,
    start: ModelParams,
    samples: &[Sample],
    train_idx: &[usize],
    test_idx: &[usize],
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    let mut params = start;
    check_frozen_exist(&params, &cfg.frozen_layers)?;
    let frozen = params.frozen_mask(&cfg.frozen_layers);
    let mut opt = Adam::new(&params, cfg.learning_rate);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ EPOCH_STREAM);
    let mut order: Vec<usize> = train_idx.to_vec();
    let mut report = TrainReport::default();
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grads) = mse_loss_and_grads(spec, &params, &batch, &cfg.frozen_layers)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(step));
            }
            opt.step(&mut params, &grads, &frozen);
            step += 1;
        }
        if (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs {
            let model = Model {
                schema: MODEL_SCHEMA.into(),
                spec: spec.clone(),
                params: params.clone(),
            };
            let train_refs: Vec<&Sample> = train_idx.iter().map(|&i| &samples[i]).collect();
            let train_mae = mae_of(&model, &train_refs)?;
            let test_mae = if test_idx.is_empty() {
                train_mae
            } else {
                let test_refs: Vec<&Sample> = test_idx.iter().map(|&i| &samples[i]).collect();
                mae_of(&model, &test_refs)?
            };
            report.curve.push(EpochStats {
                epoch: epoch + 1,
                train_mae,
                test_mae,
            });
        }
    }

    Ok((
        Model {
            schema: MODEL_SCHEMA.into(),
            spec: spec.clone(),
            params,
        },
        report,
    ))
}

/// Initialize from the config seed, split the data, and run mini-batch
/// Adam. Returns the trained model and its per-epoch learning curve.
pub fn train(spec: &ModelSpec, samples: &[Sample], cfg: &TrainConfig) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let (train_idx, test_idx) = split_indices(samples.len(), cfg.split_fraction, cfg.seed)?;
    let params = crate::ml::init_params(spec, cfg.seed)?;
    run_training(spec, params, samples, &train_idx, &test_idx, cfg)
}

/// [`train`] with a caller-chosen train/test split instead of the seeded
/// one — the learning-curve study trains on nested subsets of one pool
/// while holding a fixed test set.
pub fn train_with_split(
    spec: &ModelSpec,
    samples: &[Sample],
    train_idx: &[usize],
    test_idx: &[usize],
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    spec.validate()?;
    if train_idx.is_empty() {
        return Err(Error::Data("cannot train on an empty index list".into()));
    }
    if let Some(&bad) = train_idx.iter().chain(test_idx).find(|&&i| i >= samples.len()) {
        return Err(Error::Data(format!(
            "split index {bad} is out of range for {} samples",
            samples.len()
        )));
    }
    let params = crate::ml::init_params(spec, cfg.seed)?;
    run_training(spec, params, samples, train_idx, test_idx, cfg)
}

/// Continue training `model` with every layer except the first frozen,
/// using all of `samples` (no split — the point of fine-tuning is a small,
/// fully used dataset). The learning curve reports the training MAE in both
/// columns; evaluation belongs on a separate dataset.
///
/// If `cfg.frozen_layers` is non-empty it must already equal the computed
/// everything-but-the-first-layer set; anything else is a config error.
pub fn finetune_first_layer(
    model: &Model,
    samples: &[Sample],
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Data("cannot fine-tune on an empty dataset".into()));
    }
    let first = ModelParams::layer_of(&model.params.entries[0].0).to_string();
    let mut frozen: Vec<String> = Vec::new();
    for (name, _) in &model.params.entries {
        let layer = ModelParams::layer_of(name).to_string();
        if layer != first && !frozen.contains(&layer) {
            frozen.push(layer);
        }
    }
    if !cfg.frozen_layers.is_empty() {
        let mut given = cfg.frozen_layers.clone();
        let mut want = frozen.clone();
        given.sort();
        want.sort();
        if given != want {
            return Err(Error::Config(format!(
                "fine-tuning frees only layer {first:?}; frozen set must be exactly {want:?}"
            )));
        }
    }
    let cfg = TrainConfig {
        frozen_layers: frozen,
        ..cfg.clone()
    };
    let all: Vec<usize> = (0..samples.len()).collect();
    run_training(&model.spec, model.params.clone(), samples, &all, &[], &cfg)
}

/// MAE, RMSE, and per-sample residuals of `model` on `samples`.
pub fn evaluate(model: &Model, samples: &[Sample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    let mut residuals = Vec::with_capacity(samples.len());
    for s in samples {
        residuals.push(model.predict(s)? - s.target_energy);
    }
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64;
    let rmse =
        (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(Metrics {
        mae,
        rmse,
        residuals,
    })
}

/// Result of comparing analytic gradients against central differences.
#[derive(Copy, Clone, Debug)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Probe `n_probe` randomly chosen parameter coordinates of a freshly
/// initialized model, comparing the reverse-mode gradient of the batch loss
/// against a central finite difference with step `1e-5`.
pub fn gradient_check(
    spec: &ModelSpec,
    batch: &[&Sample],
    seed: u64,
    n_probe: usize,
) -> Result<GradCheck> {
    let params = crate::ml::init_params(spec, seed)?;
    let (loss, grads) = mse_loss_and_grads(spec, &params, batch, &[])?;
    // The difference quotient carries roundoff noise of order
    // k·ε·|loss|/step ≈ k·2e-11·|loss|, where k (tens to a few hundred)
    // accounts for cancellation across the accumulation chain. Gradients
    // near that scale cannot be resolved relatively at all; the floor in
    // the denominator compares them absolutely against it instead, sized
    // so that worst-case noise stays below a 1e-5 relative verdict.
    let floor = 5e-4 * loss.abs().max(1.0);
    let total: usize = params.entries.iter().map(|(_, t)| t.len()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4744_4348);
    let step = 1e-5;
    let mut max_rel: f64 = 0.0;
    for _ in 0..n_probe {
        let flat = rand::Rng::gen_range(&mut rng, 0..total);
        // locate (entry, row, col) for the flat coordinate
        let mut remaining = flat;
        let mut entry = 0;
        while remaining >= params.entries[entry].1.len() {
            remaining -= params.entries[entry].1.len();
            entry += 1;
        }
        let cols = params.entries[entry].1.ncols();
        let (r, c) = (remaining / cols, remaining % cols);

        let mut plus = params.clone();
        plus.entries[entry].1[[r, c]] += step;
        let mut minus = params.clone();
        minus.entries[entry].1[[r, c]] -= step;
        let fd = (mse_loss(spec, &plus, batch)? - mse_loss(spec, &minus, batch)?) / (2.0 * step);
        let analytic = grads[entry][[r, c]];
        let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(floor);
        max_rel = max_rel.max(rel);
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        checked: n_probe,
    })
}
