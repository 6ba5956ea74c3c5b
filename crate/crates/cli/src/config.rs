//! Run configuration as a flat map of dotted keys.
//!
//! Layers are applied in order: a JSON config file, `--set key=value`
//! overrides, then dedicated command-line flags (the flag wins). The task is
//! resolved first so that the loss weights default to the task's values
//! unless a layer sets them explicitly.
//!
//! Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `seed` | seed for generation, splits, initialization and shuffling |
//! | `model.task` | `classification` or `regression` |
//! | `model.ablation` | `full`, `no_bue`, `no_pne`, `no_recon` |
//! | `model.t_layers`, `model.feature_dim`, `model.hidden_dim`, `model.latent_dim` | encoder shape |
//! | `model.mlp_widths` | hidden widths of the prediction head, e.g. `[32]` or `"32,16"` |
//! | `model.n_classes` | number of classes |
//! | `model.eta1`, `model.eta2` | reconstruction and supervised loss weights |
//! | `model.delta` | reconstruction target offset and evaluation threshold |
//! | `model.top_k` | saliency ranking length |
//! | `model.query` | `own` or `mirrored` query for cross-sign attention |
//! | `model.edge_weighted` | scale attention by edge magnitude |
//! | `train.batch_size`, `train.lr0`, `train.max_epochs`, `train.patience`, `train.weight_decay`, `train.k_folds` | optimization |
//! | `synth.n_nodes`, `synth.n_subjects`, `synth.n_communities`, `synth.series_length`, `synth.noise_level`, `synth.class_effect` | generator |
//! | `paths.dataset`, `paths.checkpoint`, `paths.out_dir` | file locations |
//!
//! The loss-weight grids explored for the original model were
//! `eta1 ∈ {0.01, 0.1, 0.5, 1}` and `eta2 ∈ {0.1, 1, 5}`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use dsbn_core::encoder::QuerySource;
use dsbn_core::model::{Ablation, DsbnConfig, Task};
use dsbn_core::synth::SynthConfig;
use dsbn_core::train::TrainConfig;

use crate::error::{CliError, CliResult};
use crate::formats::read_json;

pub type Layer = BTreeMap<String, Value>;

const KEYS: &[&str] = &[
    "seed",
    "model.task",
    "model.ablation",
    "model.t_layers",
    "model.feature_dim",
    "model.hidden_dim",
    "model.latent_dim",
    "model.mlp_widths",
    "model.n_classes",
    "model.eta1",
    "model.eta2",
    "model.delta",
    "model.top_k",
    "model.query",
    "model.edge_weighted",
    "train.batch_size",
    "train.lr0",
    "train.max_epochs",
    "train.patience",
    "train.weight_decay",
    "train.k_folds",
    "synth.n_nodes",
    "synth.n_subjects",
    "synth.n_communities",
    "synth.series_length",
    "synth.noise_level",
    "synth.class_effect",
    "paths.dataset",
    "paths.checkpoint",
    "paths.out_dir",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub model: DsbnConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub paths: Paths,
}

/// Reads a config file: a JSON object with flat dotted keys.
pub fn read_layer(path: &Path) -> CliResult<Layer> {
    let value: Value = read_json(path)?;
    match value {
        Value::Object(map) => Ok(map.into_iter().collect()),
        _ => Err(CliError::Validation(format!("{}: config must be a JSON object", path.display()))),
    }
}

/// Parses `key=value` overrides. The value is read as JSON when possible
/// and as a bare string otherwise, so `model.task=regression` and
/// `model.mlp_widths=[32,16]` both work.
pub fn parse_overrides(pairs: &[String]) -> CliResult<Layer> {
    let mut layer = Layer::new();
    for pair in pairs {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{pair}` is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        layer.insert(key.trim().to_string(), value);
    }
    Ok(layer)
}

/// Merges layers left to right; later layers win.
pub fn merge(layers: impl IntoIterator<Item = Layer>) -> Layer {
    let mut out = Layer::new();
    for layer in layers {
        out.extend(layer);
    }
    out
}

fn type_error(key: &str, expected: &str, v: &Value) -> CliError {
    CliError::Validation(format!("config key {key}: expected {expected}, got {v}"))
}

fn as_u64(key: &str, v: &Value) -> CliResult<u64> {
    v.as_u64().ok_or_else(|| type_error(key, "a non-negative integer", v))
}

fn as_usize(key: &str, v: &Value) -> CliResult<usize> {
    usize::try_from(as_u64(key, v)?).map_err(|_| type_error(key, "a smaller integer", v))
}

fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
    v.as_f64().ok_or_else(|| type_error(key, "a number", v))
}

fn as_str<'a>(key: &str, v: &'a Value) -> CliResult<&'a str> {
    v.as_str().ok_or_else(|| type_error(key, "a string", v))
}

fn as_bool(key: &str, v: &Value) -> CliResult<bool> {
    v.as_bool().ok_or_else(|| type_error(key, "true or false", v))
}

fn as_widths(key: &str, v: &Value) -> CliResult<Vec<usize>> {
    match v {
        Value::Array(items) => items.iter().map(|i| as_usize(key, i)).collect(),
        Value::String(s) if s.trim().is_empty() => Ok(Vec::new()),
        Value::String(s) => s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| type_error(key, "a list of widths", v)))
            .collect(),
        Value::Number(_) => Ok(vec![as_usize(key, v)?]),
        _ => Err(type_error(key, "a list of widths", v)),
    }
}

impl RunConfig {
    /// Builds a configuration from merged layers. Unknown keys are usage
    /// errors; ill-typed or out-of-range values are validation errors.
    pub fn from_layer(layer: &Layer) -> CliResult<Self> {
        if let Some(unknown) = layer.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key `{unknown}`")));
        }
        let mut c = RunConfig::default();
        if let Some(v) = layer.get("model.task") {
            let name = as_str("model.task", v)?;
            let task = Task::from_name(name)
                .ok_or_else(|| CliError::Validation(format!("unknown task `{name}`")))?;
            c.model = DsbnConfig::for_task(task);
        }
        for (key, v) in layer {
            let k = key.as_str();
            match k {
                "model.task" => {}
                "seed" => c.seed = as_u64(k, v)?,
                "model.ablation" => {
                    let name = as_str(k, v)?;
                    c.model.ablation = Ablation::from_name(name)
                        .ok_or_else(|| CliError::Validation(format!("unknown ablation `{name}`")))?;
                }
                "model.t_layers" => c.model.t_layers = as_usize(k, v)?,
                "model.feature_dim" => c.model.feature_dim = as_usize(k, v)?,
                "model.hidden_dim" => c.model.hidden_dim = as_usize(k, v)?,
                "model.latent_dim" => c.model.latent_dim = as_usize(k, v)?,
                "model.mlp_widths" => c.model.mlp_widths = as_widths(k, v)?,
                "model.n_classes" => c.model.n_classes = as_usize(k, v)?,
                "model.eta1" => c.model.eta1 = as_f64(k, v)?,
                "model.eta2" => c.model.eta2 = as_f64(k, v)?,
                "model.delta" => c.model.delta = as_f64(k, v)?,
                "model.top_k" => c.model.top_k = as_usize(k, v)?,
                "model.query" => {
                    c.model.encoder.query = match as_str(k, v)? {
                        "own" => QuerySource::Own,
                        "mirrored" => QuerySource::Mirrored,
                        other => return Err(CliError::Validation(format!("unknown query source `{other}`"))),
                    }
                }
                "model.edge_weighted" => c.model.encoder.edge_weighted = as_bool(k, v)?,
                "train.batch_size" => c.train.batch_size = as_usize(k, v)?,
                "train.lr0" => c.train.lr0 = as_f64(k, v)?,
                "train.max_epochs" => c.train.max_epochs = as_usize(k, v)?,
                "train.patience" => c.train.patience = as_usize(k, v)?,
                "train.weight_decay" => c.train.weight_decay = as_f64(k, v)?,
                "train.k_folds" => c.train.k_folds = as_usize(k, v)?,
                "synth.n_nodes" => c.synth.n_nodes = as_usize(k, v)?,
                "synth.n_subjects" => c.synth.n_subjects = as_usize(k, v)?,
                "synth.n_communities" => c.synth.n_communities = as_usize(k, v)?,
                "synth.series_length" => c.synth.series_length = as_usize(k, v)?,
                "synth.noise_level" => c.synth.noise_level = as_f64(k, v)?,
                "synth.class_effect" => c.synth.class_effect = as_f64(k, v)?,
                "paths.dataset" => c.paths.dataset = Some(PathBuf::from(as_str(k, v)?)),
                "paths.checkpoint" => c.paths.checkpoint = Some(PathBuf::from(as_str(k, v)?)),
                "paths.out_dir" => c.paths.out_dir = Some(PathBuf::from(as_str(k, v)?)),
                _ => unreachable!("key list and match arms cover the same keys"),
            }
        }
        c.train.seed = c.seed;
        c.synth.seed = c.seed;
        Ok(c)
    }

    /// Validates the model and training sections.
    pub fn validate_model(&self) -> CliResult<()> {
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// The configuration as flat dotted keys; reading it back with
    /// [`RunConfig::from_layer`] yields the same configuration.
    pub fn to_layer(&self) -> Layer {
        let m = &self.model;
        let t = &self.train;
        let s = &self.synth;
        let query = match m.encoder.query {
            QuerySource::Own => "own",
            QuerySource::Mirrored => "mirrored",
        };
        let mut layer = Layer::new();
        let mut put = |k: &str, v: Value| {
            layer.insert(k.to_string(), v);
        };
        put("seed", json!(self.seed));
        put("model.task", json!(m.task.name()));
        put("model.ablation", json!(m.ablation.name()));
        put("model.t_layers", json!(m.t_layers));
        put("model.feature_dim", json!(m.feature_dim));
        put("model.hidden_dim", json!(m.hidden_dim));
        put("model.latent_dim", json!(m.latent_dim));
        put("model.mlp_widths", json!(m.mlp_widths));
        put("model.n_classes", json!(m.n_classes));
        put("model.eta1", json!(m.eta1));
        put("model.eta2", json!(m.eta2));
        put("model.delta", json!(m.delta));
        put("model.top_k", json!(m.top_k));
        put("model.query", json!(query));
        put("model.edge_weighted", json!(m.encoder.edge_weighted));
        put("train.batch_size", json!(t.batch_size));
        put("train.lr0", json!(t.lr0));
        put("train.max_epochs", json!(t.max_epochs));
        put("train.patience", json!(t.patience));
        put("train.weight_decay", json!(t.weight_decay));
        put("train.k_folds", json!(t.k_folds));
        put("synth.n_nodes", json!(s.n_nodes));
        put("synth.n_subjects", json!(s.n_subjects));
        put("synth.n_communities", json!(s.n_communities));
        put("synth.series_length", json!(s.series_length));
        put("synth.noise_level", json!(s.noise_level));
        put("synth.class_effect", json!(s.class_effect));
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| json!(p.to_string_lossy()));
        for (k, v) in [
            ("paths.dataset", path(&self.paths.dataset)),
            ("paths.checkpoint", path(&self.paths.checkpoint)),
            ("paths.out_dir", path(&self.paths.out_dir)),
        ] {
            if let Some(v) = v {
                put(k, v);
            }
        }
        layer
    }
}
