//! Run configuration: a small documented TOML schema covering the model
//! architecture and the training hyperparameters.
//!
//! ```toml
//! [model]
//! kind = "mlp"              # "mlp" or "set"
//! preset = "coarse"         # mlp only: coarse | fine | wide
//! input_width = 66          # required with `preset`
//! # ...or an explicit architecture instead of a preset:
//! # layer_sizes = [66, 100, 50, 1]
//! # activations = ["relu", "sigmoid", "linear"]
//!
//! [train]                   # every key optional; defaults shown
//! learning_rate = 1e-3
//! epochs = 2000
//! batch_size = 64
//! split_fraction = 0.8
//! seed = 0
//! eval_every = 1
//! frozen_layers = []
//! ```
//!
//! For `kind = "set"` the architecture keys are `d_k`,
//! `n_attention_layers`, `corr_head_widths`, and `gate_widths`; omitted
//! keys keep the defaults. Unknown keys are rejected, with the offending
//! line in the error.

use std::path::Path;

use serde::Deserialize;

use crate::ml::train::TrainConfig;
use crate::ml::{Activation, MlpSpec, ModelSpec, SetModelSpec};
use crate::{Error, Result};

/// A parsed and validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: ModelSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    train: RawTrain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    preset: Option<String>,
    input_width: Option<usize>,
    layer_sizes: Option<Vec<usize>>,
    activations: Option<Vec<String>>,
    d_k: Option<usize>,
    n_attention_layers: Option<usize>,
    corr_head_widths: Option<Vec<usize>>,
    gate_widths: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    split_fraction: Option<f64>,
    seed: Option<u64>,
    eval_every: Option<usize>,
    frozen_layers: Option<Vec<String>>,
}

fn parse_activation(name: &str) -> Result<Activation> {
    match name {
        "relu" => Ok(Activation::Relu),
        "sigmoid" => Ok(Activation::Sigmoid),
        "linear" => Ok(Activation::Linear),
        other => Err(Error::Config(format!(
            "unknown activation {other:?} (expected relu, sigmoid, or linear)"
        ))),
    }
}

fn mlp_spec(raw: &RawModel) -> Result<MlpSpec> {
    if raw.d_k.is_some()
        || raw.n_attention_layers.is_some()
        || raw.corr_head_widths.is_some()
        || raw.gate_widths.is_some()
    {
        return Err(Error::Config(
            "d_k / n_attention_layers / corr_head_widths / gate_widths apply to kind = \"set\""
                .into(),
        ));
    }
    match (&raw.preset, &raw.layer_sizes) {
        (Some(_), Some(_)) => Err(Error::Config(
            "give either `preset` or `layer_sizes`, not both".into(),
        )),
        (Some(preset), None) => {
            let width = raw.input_width.ok_or_else(|| {
                Error::Config("`input_width` is required with `preset`".into())
            })?;
            match preset.as_str() {
                "coarse" => Ok(MlpSpec::coarse(width)),
                "fine" => Ok(MlpSpec::fine(width)),
                "wide" => Ok(MlpSpec::wide(width)),
                other => Err(Error::Config(format!(
                    "unknown preset {other:?} (expected coarse, fine, or wide)"
                ))),
            }
        }
        (None, Some(sizes)) => {
            let names = raw.activations.as_ref().ok_or_else(|| {
                Error::Config("`activations` is required with `layer_sizes`".into())
            })?;
            let activations = names
                .iter()
                .map(|n| parse_activation(n))
                .collect::<Result<Vec<_>>>()?;
            MlpSpec::new(sizes.clone(), activations)
        }
        (None, None) => Err(Error::Config(
            "an mlp model needs `preset` + `input_width` or `layer_sizes` + `activations`".into(),
        )),
    }
}

fn set_spec(raw: &RawModel) -> Result<SetModelSpec> {
    if raw.preset.is_some()
        || raw.input_width.is_some()
        || raw.layer_sizes.is_some()
        || raw.activations.is_some()
    {
        return Err(Error::Config(
            "preset / input_width / layer_sizes / activations apply to kind = \"mlp\"".into(),
        ));
    }
    let mut spec = SetModelSpec::default();
    if let Some(d_k) = raw.d_k {
        spec.d_k = d_k;
    }
    if let Some(n) = raw.n_attention_layers {
        spec.n_attention_layers = n;
    }
    if let Some(widths) = &raw.corr_head_widths {
        spec.corr_head_widths = widths.clone();
    }
    if let Some(widths) = &raw.gate_widths {
        spec.gate_widths = widths.clone();
    }
    Ok(spec)
}

/// Parse configuration text. `path` is only used in error messages.
pub fn parse_run_config(text: &str, path: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        Error::Parse {
            path: path.to_string(),
            line,
            msg: e.message().to_string(),
        }
    })?;

    let spec = match raw.model.kind.as_str() {
        "mlp" => ModelSpec::Mlp(mlp_spec(&raw.model)?),
        "set" => ModelSpec::Set(set_spec(&raw.model)?),
        other => {
            return Err(Error::Config(format!(
                "unknown model kind {other:?} (expected \"mlp\" or \"set\")"
            )))
        }
    };
    spec.validate()?;

    let defaults = TrainConfig::default();
    let train = TrainConfig {
        learning_rate: raw.train.learning_rate.unwrap_or(defaults.learning_rate),
        epochs: raw.train.epochs.unwrap_or(defaults.epochs),
        batch_size: raw.train.batch_size.unwrap_or(defaults.batch_size),
        split_fraction: raw.train.split_fraction.unwrap_or(defaults.split_fraction),
        seed: raw.train.seed.unwrap_or(defaults.seed),
        eval_every: raw.train.eval_every.unwrap_or(defaults.eval_every),
        frozen_layers: raw.train.frozen_layers.unwrap_or_default(),
    };
    train.validate()?;

    Ok(RunConfig { spec, train })
}

/// Read and parse a configuration file.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_run_config(&text, &path.display().to_string())
}
