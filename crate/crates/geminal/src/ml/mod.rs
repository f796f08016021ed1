//! Deterministic training stack: reverse-mode gradients over dense matrices,
//! Adam, fixed-size feed-forward regressors, and the gated set-attention
//! model that handles variable pair counts.
//!
//! Everything here is a pure function of (model spec, dataset, config, seed):
//! initialization draws from a counter-based generator, shuffles are seeded,
//! and no step depends on iteration order of any unordered container, so two
//! runs with the same inputs produce bit-identical parameters.

pub mod adam;
pub mod mlp;
pub mod set;
pub mod tape;
pub mod train;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Provenance;
use crate::{Error, Result};

/// One regression example: descriptor eigenvalues plus the auxiliary
/// separated-limit estimate, labeled with a total energy in hartree.
#[derive(Clone, Debug)]
pub struct Sample {
    /// Sorted descriptor eigenvalues.
    pub features: Vec<f64>,
    pub n_electrons: usize,
    /// Separated-limit energy estimate fed to the gated model.
    pub e_infinity: f64,
    /// Total energy (electronic + nuclear), hartree.
    pub target_energy: f64,
    pub provenance: Provenance,
}

impl From<&crate::dataset::Record> for Sample {
    fn from(r: &crate::dataset::Record) -> Sample {
        Sample {
            features: r.features.clone(),
            n_electrons: r.n_electrons,
            e_infinity: r.e_infinity,
            target_energy: r.target_total,
            provenance: r.provenance.clone(),
        }
    }
}

/// Elementwise nonlinearity of one dense layer.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

/// Architecture of a fixed-input-size feed-forward regressor.
///
/// `layer_sizes` lists the input width followed by every layer's output
/// width; `activations` has one entry per layer. The final layer must be
/// linear with a single output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        let spec = MlpSpec {
            layer_sizes,
            activations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs an input width and at least one layer".into(),
            ));
        }
        if self.activations.len() != self.layer_sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers but {} activations",
                self.layer_sizes.len() - 1,
                self.activations.len()
            )));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::Config("the output layer must have width 1".into()));
        }
        if *self.activations.last().unwrap() != Activation::Linear {
            return Err(Error::Config("the output layer must be linear".into()));
        }
        Ok(())
    }

    /// Expected feature-vector length.
    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    /// The wide-then-narrow regressor used for the coarse four- and
    /// six-atom datasets: `in → 100 (relu) → 50 (sigmoid) → 1`.
    pub fn coarse(input: usize) -> Self {
        MlpSpec {
            layer_sizes: vec![input, 100, 50, 1],
            activations: vec![Activation::Relu, Activation::Sigmoid, Activation::Linear],
        }
    }

    /// The deeper regressor for the fine six-atom grid dataset:
    /// `in → 200 (relu) → 50/50/50 (sigmoid) → 1`.
    pub fn fine(input: usize) -> Self {
        MlpSpec {
            layer_sizes: vec![input, 200, 50, 50, 50, 1],
            activations: vec![
                Activation::Relu,
                Activation::Sigmoid,
                Activation::Sigmoid,
                Activation::Sigmoid,
                Activation::Linear,
            ],
        }
    }

    /// The wide regressor pretrained on composite ten-atom data:
    /// `in → 500/200/200/100 (relu) → 1`.
    pub fn wide(input: usize) -> Self {
        MlpSpec {
            layer_sizes: vec![input, 500, 200, 200, 100, 1],
            activations: vec![
                Activation::Relu,
                Activation::Relu,
                Activation::Relu,
                Activation::Relu,
                Activation::Linear,
            ],
        }
    }
}

/// Architecture of the gated set-attention model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetModelSpec {
    /// Width of the query/key/value projections.
    pub d_k: usize,
    pub n_attention_layers: usize,
    /// Dense widths of the per-token correlation head (a final linear
    /// projection to one output per token is appended automatically).
    pub corr_head_widths: Vec<usize>,
    /// Dense widths of the gate head (its outputs are summed and squashed).
    pub gate_widths: Vec<usize>,
}

impl Default for SetModelSpec {
    fn default() -> Self {
        SetModelSpec {
            d_k: 25,
            n_attention_layers: 2,
            corr_head_widths: vec![10, 10],
            gate_widths: vec![10, 10, 10],
        }
    }
}

impl SetModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d_k == 0 {
            return Err(Error::Config("attention width must be positive".into()));
        }
        if self.n_attention_layers == 0 {
            return Err(Error::Config("need at least one attention layer".into()));
        }
        if self.corr_head_widths.iter().any(|&w| w == 0)
            || self.gate_widths.iter().any(|&w| w == 0)
        {
            return Err(Error::Config("head widths must be positive".into()));
        }
        if self.corr_head_widths.is_empty() || self.gate_widths.is_empty() {
            return Err(Error::Config("head widths must be non-empty".into()));
        }
        Ok(())
    }
}

/// Which architecture a parameter set belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Mlp(MlpSpec),
    Set(SetModelSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Mlp(m) => m.validate(),
            ModelSpec::Set(s) => s.validate(),
        }
    }
}

/// Named parameter tensors plus the seed they were initialized from.
///
/// Entry order is part of the model definition: gradients, optimizer state,
/// and serialization all address parameters by position, and names exist for
/// freezing and inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub seed: u64,
    pub entries: Vec<(String, Array2<f64>)>,
}

impl ModelParams {
    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn n_scalars(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.len()).sum()
    }

    /// Layer name of an entry: the segment before the first `/`.
    pub fn layer_of(name: &str) -> &str {
        name.split('/').next().unwrap_or(name)
    }

    /// Mask of entries whose layer appears in `frozen_layers`.
    pub fn frozen_mask(&self, frozen_layers: &[String]) -> Vec<bool> {
        self.entries
            .iter()
            .map(|(n, _)| frozen_layers.iter().any(|f| f == Self::layer_of(n)))
            .collect()
    }
}

/// The full parameter layout of a model: `(name, rows, cols, fan_in)` per
/// tensor, in the fixed entry order shared by initialization, gradients,
/// and optimizer state.
fn parameter_layout(spec: &ModelSpec) -> Vec<(String, usize, usize, usize)> {
    let mut layout = Vec::new();
    match spec {
        ModelSpec::Mlp(mlp) => {
            for (i, pair) in mlp.layer_sizes.windows(2).enumerate() {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                layout.push((format!("layer{i}/w"), fan_in, fan_out, fan_in));
                layout.push((format!("layer{i}/b"), 1, fan_out, fan_in));
            }
        }
        ModelSpec::Set(set) => {
            for i in 0..set.n_attention_layers {
                let d_in = if i == 0 { 1 } else { set.d_k };
                for proj in ["wq", "wk", "wv"] {
                    layout.push((format!("attn{i}/{proj}"), d_in, set.d_k, d_in));
                }
            }
            // correlation head: dense widths, then a linear token readout
            let mut d_in = set.d_k;
            for (j, &w) in set.corr_head_widths.iter().enumerate() {
                layout.push((format!("corr{j}/w"), d_in, w, d_in));
                layout.push((format!("corr{j}/b"), 1, w, d_in));
                d_in = w;
            }
            layout.push(("corr_out/w".into(), d_in, 1, d_in));
            layout.push(("corr_out/b".into(), 1, 1, d_in));
            // gate head: dense widths only; the forward pass sums and squashes
            let mut d_in = set.d_k;
            for (j, &w) in set.gate_widths.iter().enumerate() {
                layout.push((format!("gate{j}/w"), d_in, w, d_in));
                layout.push((format!("gate{j}/b"), 1, w, d_in));
                d_in = w;
            }
        }
    }
    layout
}

/// Initialize parameters for `spec`, fully determined by `seed`: every
/// tensor entry drawn from `U(−1/√fan_in, 1/√fan_in)`.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = parameter_layout(spec)
        .into_iter()
        .map(|(name, rows, cols, fan_in)| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let tensor = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound));
            (name, tensor)
        })
        .collect();
    Ok(ModelParams { seed, entries })
}

/// Verify that `params` carries exactly the tensors `spec` defines, in
/// order, with matching shapes.
pub fn check_params(spec: &ModelSpec, params: &ModelParams) -> Result<()> {
    let layout = parameter_layout(spec);
    if layout.len() != params.entries.len() {
        return Err(Error::Shape(format!(
            "expected {} parameter tensors, found {}",
            layout.len(),
            params.entries.len()
        )));
    }
    for ((name, rows, cols, _), (got_name, tensor)) in layout.iter().zip(&params.entries) {
        if name != got_name || tensor.dim() != (*rows, *cols) {
            return Err(Error::Shape(format!(
                "parameter {got_name} {:?} does not match expected {name} ({rows}, {cols})",
                tensor.dim()
            )));
        }
    }
    Ok(())
}

/// A trained (or freshly initialized) model: architecture plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema: String,
    pub spec: ModelSpec,
    pub params: ModelParams,
}

pub const MODEL_SCHEMA: &str = "geminal.model.v1";

impl Model {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let params = init_params(&spec, seed)?;
        Ok(Model {
            schema: MODEL_SCHEMA.into(),
            spec,
            params,
        })
    }

    /// Predicted total energy for one sample.
    pub fn predict(&self, sample: &Sample) -> Result<f64> {
        match &self.spec {
            ModelSpec::Mlp(spec) => mlp::predict(spec, &self.params, &sample.features),
            ModelSpec::Set(spec) => {
                Ok(set::forward(spec, &self.params, sample, None)?.e_total)
            }
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Model = serde_json::from_str(&text)?;
        if model.schema != MODEL_SCHEMA {
            return Err(Error::Data(format!(
                "unsupported model schema {:?}",
                model.schema
            )));
        }
        model.spec.validate()?;
        check_params(&model.spec, &model.params)?;
        Ok(model)
    }
}
