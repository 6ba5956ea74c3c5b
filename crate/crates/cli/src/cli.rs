//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::commands::{cmd_eval, cmd_gradcheck, cmd_reconstruct, cmd_saliency, cmd_synth, cmd_train, resolve_checkpoint_config};
use crate::config::{merge, parse_overrides, read_layer, Layer, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{emit, write_json};

#[derive(Debug, Parser)]
#[command(name = "dsbn", version, about = "Signed graph representation learning on paired signed/unsigned graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired-graph dataset.
    Synth(SynthArgs),
    /// Train with k-fold cross-validation.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Write predicted structural graphs.
    Reconstruct(ReconstructArgs),
    /// Write per-class node saliency rankings.
    Saliency(SaliencyArgs),
    /// Check analytic gradients of the full loss against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file with flat dotted keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. --set train.lr0=0.01.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Regenerate exactly the dataset described by a manifest.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub n_subjects: Option<usize>,
    #[arg(long)]
    pub n_nodes: Option<usize>,
    #[arg(long)]
    pub n_communities: Option<usize>,
    #[arg(long)]
    pub series_length: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub noise_level: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub class_effect: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    #[arg(long, value_parser = ["classification", "regression"])]
    pub task: Option<String>,
    #[arg(long, value_parser = ["full", "no_bue", "no_pne", "no_recon"])]
    pub ablation: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckpointArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Must match the task the checkpoint was trained for.
    #[arg(long, value_parser = ["classification", "regression"])]
    pub task: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub inputs: CheckpointArgs,
    /// Reconstruction entries below this are zeroed before the MAE.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Also evaluate a freshly initialized model for comparison.
    #[arg(long)]
    pub baseline: bool,
    /// Write the metrics JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub inputs: CheckpointArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    #[command(flatten)]
    pub inputs: CheckpointArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Only this class (default: every class).
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Maximum allowed relative error.
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    pub tol: f64,
}

/// Collects the explicitly given flags as a config layer.
#[derive(Default)]
struct Flags(Layer);

impl Flags {
    fn put(&mut self, key: &str, value: Option<Value>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v);
        }
        self
    }

    fn path(&mut self, key: &str, value: &Option<PathBuf>) -> &mut Self {
        self.put(key, value.as_ref().map(|p| json!(p.to_string_lossy())))
    }
}

fn layers(common: &Common, flags: Flags) -> CliResult<Layer> {
    let file = match &common.config {
        Some(p) => read_layer(p)?,
        None => Layer::new(),
    };
    let mut flags = flags;
    flags.put("seed", common.seed.map(|s| json!(s)));
    Ok(merge([file, parse_overrides(&common.overrides)?, flags.0]))
}

fn checkpoint_layer(inputs: &CheckpointArgs, extra: impl FnOnce(&mut Flags)) -> CliResult<Layer> {
    let mut f = Flags::default();
    f.path("paths.checkpoint", &inputs.checkpoint)
        .path("paths.dataset", &inputs.dataset)
        .put("model.task", inputs.task.as_ref().map(|t| json!(t)));
    extra(&mut f);
    layers(&inputs.common, f)
}

/// Runs one parsed invocation, printing results to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut f = Flags::default();
            f.path("paths.out_dir", &a.out_dir)
                .put("synth.n_subjects", a.n_subjects.map(|v| json!(v)))
                .put("synth.n_nodes", a.n_nodes.map(|v| json!(v)))
                .put("synth.n_communities", a.n_communities.map(|v| json!(v)))
                .put("synth.series_length", a.series_length.map(|v| json!(v)))
                .put("synth.noise_level", a.noise_level.map(|v| json!(v)))
                .put("synth.class_effect", a.class_effect.map(|v| json!(v)));
            let config = RunConfig::from_layer(&layers(&a.common, f)?)?;
            println!("{}", cmd_synth(&config, a.manifest.as_deref())?);
        }
        Command::Train(a) => {
            let mut f = Flags::default();
            f.path("paths.dataset", &a.dataset)
                .path("paths.out_dir", &a.out_dir)
                .put("model.task", a.model.task.map(|v| json!(v)))
                .put("model.ablation", a.model.ablation.map(|v| json!(v)))
                .put("model.eta1", a.model.eta1.map(|v| json!(v)))
                .put("model.eta2", a.model.eta2.map(|v| json!(v)))
                .put("train.max_epochs", a.epochs.map(|v| json!(v)))
                .put("train.patience", a.patience.map(|v| json!(v)))
                .put("train.batch_size", a.batch_size.map(|v| json!(v)))
                .put("train.lr0", a.lr.map(|v| json!(v)))
                .put("train.k_folds", a.folds.map(|v| json!(v)));
            let mut layer = layers(&a.common, f)?;
            // A shortened run keeps patience within the epoch budget unless
            // patience was set explicitly.
            if let Some(epochs) = layer.get("train.max_epochs").and_then(Value::as_u64) {
                if !layer.contains_key("train.patience") {
                    let default = dsbn_core::train::TrainConfig::default().patience as u64;
                    layer.insert("train.patience".into(), json!(default.min(epochs)));
                }
            }
            let config = RunConfig::from_layer(&layer)?;
            println!("{}", cmd_train(&config)?);
        }
        Command::Eval(a) => {
            let config = resolve_checkpoint_config(&checkpoint_layer(&a.inputs, |_| {})?)?;
            let report = cmd_eval(&config, a.threshold, a.baseline)?;
            match &a.out {
                Some(p) => write_json(p, &report)?,
                None => {
                    let text = serde_json::to_string_pretty(&report)
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    emit(None, &(text + "\n"))?;
                }
            }
        }
        Command::Reconstruct(a) => {
            let layer = checkpoint_layer(&a.inputs, |f| {
                f.path("paths.out_dir", &a.out_dir);
            })?;
            let config = resolve_checkpoint_config(&layer)?;
            let written = cmd_reconstruct(&config, a.threshold)?;
            println!("wrote {} reconstructions", written.len());
        }
        Command::Saliency(a) => {
            let layer = checkpoint_layer(&a.inputs, |f| {
                f.path("paths.out_dir", &a.out_dir).put("model.top_k", a.top_k.map(|v| json!(v)));
            })?;
            let config = resolve_checkpoint_config(&layer)?;
            let written = cmd_saliency(&config, a.class)?;
            println!("wrote {} saliency maps", written.len());
        }
        Command::Gradcheck(a) => {
            let config = RunConfig::from_layer(&layers(&a.common, Flags::default())?)?;
            let summary = cmd_gradcheck(&config, a.tol)?;
            println!("{summary}");
            if !summary.passed() {
                return Err(CliError::Numerical(format!(
                    "max relative error {:.3e} exceeds {:.1e}",
                    summary.max_rel_error(),
                    summary.tol
                )));
            }
        }
    }
    Ok(())
}
