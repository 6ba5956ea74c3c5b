//! Command implementations. Each returns a value describing what it did;
//! printing is left to the caller.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dsbn_core::autodiff::GradCheckReport;
use dsbn_core::graph::{SignedGraph, Subject, UnsignedGraph};
use dsbn_core::model::{
    check_subject_gradients, evaluate_with_threshold, predict, reconstruct, saliency_map, DsbnConfig, DsbnParams,
    EvalReport, PreparedSubject, Task,
};
use dsbn_core::synth::generate_dataset;
use dsbn_core::train::{cross_validate, CvOutcome, MeanStd};
use dsbn_core::Tensor;

use crate::config::{Layer, RunConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{
    checkpoint_from_named, ensure_dir, read_dataset, read_json, saliency_records, write_dataset, write_history,
    write_json, CheckpointFile, GraphFile, ManifestFile,
};

pub const DATASET_FILE: &str = "dataset.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.json";

/// Finite-difference step used by `gradcheck`.
pub const GRADCHECK_STEP: f64 = 1e-6;
/// Node count of the random subjects used by `gradcheck`.
pub const GRADCHECK_NODES: usize = 4;

fn required<'a>(path: &'a Option<PathBuf>, what: &str, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing {what}; pass {flag} or set it in the config")))
}

fn prepare(subjects: &[Subject]) -> CliResult<Vec<PreparedSubject>> {
    subjects
        .iter()
        .map(|s| PreparedSubject::new(s).map_err(CliError::from))
        .collect()
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub n_subjects: usize,
    pub n_nodes: usize,
    pub class_counts: [usize; 2],
    pub mean_structural_density: f64,
    pub mean_abs_functional: f64,
}

impl fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wrote {} subjects ({} nodes) to {}", self.n_subjects, self.n_nodes, self.dataset.display())?;
        writeln!(f, "class counts: {} / {}", self.class_counts[0], self.class_counts[1])?;
        writeln!(f, "mean structural density: {:.3}", self.mean_structural_density)?;
        write!(f, "mean |functional| weight: {:.3}", self.mean_abs_functional)
    }
}

/// Generates a dataset into `paths.out_dir`. With `manifest`, the generator
/// settings and seed come from that file instead of the configuration.
pub fn cmd_synth(config: &RunConfig, manifest: Option<&Path>) -> CliResult<SynthSummary> {
    let out_dir = required(&config.paths.out_dir, "output directory", "--out-dir")?;
    let synth = match manifest {
        Some(p) => read_json::<ManifestFile>(p)?.synth_config()?,
        None => config.synth.clone(),
    };
    let (subjects, manifest) = generate_dataset(&synth)?;
    ensure_dir(out_dir)?;
    let dataset = out_dir.join(DATASET_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    write_dataset(&dataset, &subjects)?;
    write_json(&manifest_path, &ManifestFile::from_manifest(&manifest))?;

    let mut class_counts = [0; 2];
    for s in &subjects {
        if let Some(l) = s.label {
            class_counts[l.min(1)] += 1;
        }
    }
    let m = subjects.len() as f64;
    let n = synth.n_nodes;
    let mean_structural_density = subjects.iter().map(|s| s.structural.density()).sum::<f64>() / m;
    let mean_abs_functional = subjects
        .iter()
        .map(|s| s.functional.adj().data().iter().map(|w| w.abs()).sum::<f64>() / (n * (n - 1)) as f64)
        .sum::<f64>()
        / m;
    Ok(SynthSummary {
        dataset,
        manifest: manifest_path,
        n_subjects: subjects.len(),
        n_nodes: n,
        class_counts,
        mean_structural_density,
        mean_abs_functional,
    })
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsJson {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    pub recon_mae: f64,
    pub loss: f64,
    pub recon_loss: f64,
    pub supervised_loss: f64,
}

impl MetricsJson {
    pub fn from_report(r: &EvalReport) -> Self {
        Self {
            task: r.task.name().to_string(),
            accuracy: r.classification.map(|c| c.accuracy),
            precision: r.classification.map(|c| c.precision),
            f1: r.classification.map(|c| c.f1),
            mae: r.mae,
            recon_mae: r.recon_mae,
            loss: r.loss,
            recon_loss: r.recon_loss,
            supervised_loss: r.supervised_loss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStdJson {
    pub mean: f64,
    pub std: f64,
}

impl From<MeanStd> for MeanStdJson {
    fn from(m: MeanStd) -> Self {
        Self { mean: m.mean, std: m.std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldJson {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub metrics: MetricsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryJson {
    /// `accuracy` or `mae`.
    pub metric_name: String,
    pub metric: MeanStdJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<MeanStdJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<MeanStdJson>,
    pub recon_mae: MeanStdJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainMetricsJson {
    pub task: String,
    pub ablation: String,
    pub best_fold: usize,
    pub folds: Vec<FoldJson>,
    pub summary: SummaryJson,
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub out_dir: PathBuf,
    pub metrics: TrainMetricsJson,
    pub cv: CvOutcome,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.metrics;
        let name = &m.summary.metric_name;
        for fold in &m.folds {
            let value = fold.metrics.accuracy.or(fold.metrics.mae).unwrap_or(f64::NAN);
            writeln!(
                f,
                "fold {}: {name} {value:.4}, recon mae {:.4}, best epoch {} of {}{}",
                fold.fold,
                fold.metrics.recon_mae,
                fold.best_epoch,
                fold.epochs_run,
                if fold.stopped_early { " (early stop)" } else { "" }
            )?;
        }
        let s = &m.summary;
        writeln!(f, "{} [{}] {name}: {:.4} ± {:.4}", m.task, m.ablation, s.metric.mean, s.metric.std)?;
        if let (Some(p), Some(f1)) = (s.precision, s.f1) {
            writeln!(f, "precision: {:.4} ± {:.4}, f1: {:.4} ± {:.4}", p.mean, p.std, f1.mean, f1.std)?;
        }
        writeln!(f, "recon mae: {:.4} ± {:.4}", s.recon_mae.mean, s.recon_mae.std)?;
        write!(f, "best fold {} -> {}", m.best_fold, self.out_dir.join(CHECKPOINT_FILE).display())
    }
}

/// Index of the fold with the best validation task metric; ties go to the
/// lower index.
pub fn best_fold(cv: &CvOutcome, task: Task) -> usize {
    let mut best = 0;
    for (i, f) in cv.folds.iter().enumerate() {
        let (a, b) = (f.report.task_metric(), cv.folds[best].report.task_metric());
        let better = match task {
            Task::Classification => a > b,
            Task::Regression => a < b,
        };
        if better {
            best = i;
        }
    }
    best
}

/// k-fold training on `paths.dataset`, writing into `paths.out_dir`:
/// `config.json` (the resolved configuration), `fold_<k>/history.csv` and
/// `fold_<k>/checkpoint.json` per fold, `checkpoint.json` and
/// `history.csv` of the best fold, `metrics.json`, and a copy of the
/// dataset's manifest when one sits next to it.
pub fn cmd_train(config: &RunConfig) -> CliResult<TrainSummary> {
    let dataset = required(&config.paths.dataset, "dataset", "--dataset")?;
    let out_dir = required(&config.paths.out_dir, "output directory", "--out-dir")?;
    config.validate_model()?;
    let subjects = prepare(&read_dataset(dataset)?)?;
    log::info!(
        "training {} subjects, {} folds, task {}, ablation {}",
        subjects.len(),
        config.train.k_folds,
        config.model.task.name(),
        config.model.ablation.name()
    );
    let cv = cross_validate(&subjects, &config.model, &config.train)?;

    ensure_dir(out_dir)?;
    write_json(&out_dir.join(CONFIG_FILE), &config.to_layer())?;
    if let Some(parent) = dataset.parent() {
        let manifest = parent.join(MANIFEST_FILE);
        if manifest.is_file() {
            let target = out_dir.join(MANIFEST_FILE);
            if fs::canonicalize(&manifest).ok() != fs::canonicalize(&target).ok() {
                fs::copy(&manifest, &target).map_err(|e| CliError::io(&target, e))?;
            }
        }
    }
    let mut folds = Vec::with_capacity(cv.folds.len());
    for f in &cv.folds {
        let dir = out_dir.join(format!("fold_{}", f.fold));
        ensure_dir(&dir)?;
        write_history(&dir.join(HISTORY_FILE), &f.outcome.history)?;
        write_json(&dir.join(CHECKPOINT_FILE), &checkpoint_from_named(&f.outcome.params.to_named()))?;
        folds.push(FoldJson {
            fold: f.fold,
            n_train: f.split.train.len(),
            n_validation: f.split.validation.len(),
            best_epoch: f.outcome.best_epoch,
            epochs_run: f.outcome.history.len(),
            stopped_early: f.outcome.stopped_early,
            metrics: MetricsJson::from_report(&f.report),
        });
    }
    let best = best_fold(&cv, config.model.task);
    log::info!("best fold {best}, writing {}", out_dir.display());
    let winner = &cv.folds[best].outcome;
    write_history(&out_dir.join(HISTORY_FILE), &winner.history)?;
    write_json(&out_dir.join(CHECKPOINT_FILE), &checkpoint_from_named(&winner.params.to_named()))?;

    let s = &cv.summary;
    let metrics = TrainMetricsJson {
        task: config.model.task.name().to_string(),
        ablation: config.model.ablation.name().to_string(),
        best_fold: best,
        folds,
        summary: SummaryJson {
            metric_name: match config.model.task {
                Task::Classification => "accuracy",
                Task::Regression => "mae",
            }
            .to_string(),
            metric: s.metric.into(),
            precision: s.precision.map(Into::into),
            f1: s.f1.map(Into::into),
            recon_mae: s.recon_mae.into(),
        },
    };
    write_json(&out_dir.join(METRICS_FILE), &metrics)?;
    Ok(TrainSummary {
        out_dir: out_dir.to_path_buf(),
        metrics,
        cv,
    })
}

// ---------------------------------------------------------------- checkpoints

/// Resolves the configuration of a command that reads a checkpoint.
///
/// The `config.json` written next to the checkpoint by `train` forms the
/// base layer (its `paths.*` entries are dropped); `user` holds everything
/// given on the command line. Asking for a task other than the one the
/// checkpoint was trained for is rejected.
pub fn resolve_checkpoint_config(user: &Layer) -> CliResult<RunConfig> {
    let provisional = RunConfig::from_layer(user)?;
    let checkpoint = required(&provisional.paths.checkpoint, "checkpoint", "--checkpoint")?;
    let echo = checkpoint.parent().map(|d| d.join(CONFIG_FILE)).filter(|p| p.is_file());
    let Some(echo) = echo else {
        return Ok(provisional);
    };
    let mut base = crate::config::read_layer(&echo)?;
    base.retain(|k, _| !k.starts_with("paths."));
    let trained = RunConfig::from_layer(&base)?;
    if let Some(asked) = user.get("model.task") {
        if asked.as_str() != Some(trained.model.task.name()) {
            return Err(CliError::Validation(format!(
                "task/checkpoint mismatch: {} was trained for {}, but {} was requested",
                checkpoint.display(),
                trained.model.task.name(),
                asked
            )));
        }
    }
    RunConfig::from_layer(&crate::config::merge([base, user.clone()]))
}

/// Loads parameters for `model` from a checkpoint file.
pub fn load_checkpoint(path: &Path, model: &DsbnConfig) -> CliResult<DsbnParams> {
    let file: CheckpointFile = read_json(path)?;
    let mut params = DsbnParams::init(&mut ChaCha8Rng::seed_from_u64(0), model)?;
    let expected_out = model.output_dim();
    let mut entries = Vec::new();
    for (name, slot) in params.named() {
        let e = file.get(&name).ok_or_else(|| {
            CliError::Validation(format!("task/checkpoint mismatch: {} has no parameter {name}", path.display()))
        })?;
        if e.shape != slot.shape() {
            let what = if name.starts_with("mlp.") && slot.cols() == expected_out && e.shape[1] != expected_out {
                "task/checkpoint mismatch"
            } else {
                "checkpoint does not match the model configuration"
            };
            return Err(CliError::Validation(format!(
                "{what}: {} parameter {name} has shape {:?}, expected {:?}",
                path.display(),
                e.shape,
                slot.shape()
            )));
        }
        let t = Tensor::from_vec(e.shape[0], e.shape[1], e.values.clone())
            .map_err(|err| CliError::Validation(format!("{}: {name}: {err}", path.display())))?;
        entries.push((name, t));
    }
    if file.len() != entries.len() {
        return Err(CliError::Validation(format!(
            "checkpoint does not match the model configuration: {} holds {} parameters, expected {}",
            path.display(),
            file.len(),
            entries.len()
        )));
    }
    params.load_named(&entries)?;
    Ok(params)
}

fn checkpoint_inputs(config: &RunConfig) -> CliResult<(DsbnParams, Vec<PreparedSubject>)> {
    let checkpoint = required(&config.paths.checkpoint, "checkpoint", "--checkpoint")?;
    let dataset = required(&config.paths.dataset, "dataset", "--dataset")?;
    config.model.validate()?;
    let params = load_checkpoint(checkpoint, &config.model)?;
    let subjects = prepare(&read_dataset(dataset)?)?;
    Ok((params, subjects))
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineJson {
    /// Reconstruction MAE of a freshly initialized model under `seed`.
    pub recon_mae: f64,
    /// `recon_mae` of the checkpoint divided by the baseline's.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalJson {
    pub n_subjects: usize,
    pub threshold: f64,
    #[serde(flatten)]
    pub metrics: MetricsJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineJson>,
}

/// Evaluates a checkpoint on a dataset. Reconstructions are thresholded at
/// `threshold` (default: the model's `delta`) before the MAE is taken. With
/// `baseline`, a model initialized from `seed` is evaluated the same way
/// for comparison.
pub fn cmd_eval(config: &RunConfig, threshold: Option<f64>, baseline: bool) -> CliResult<EvalJson> {
    let (params, subjects) = checkpoint_inputs(config)?;
    let threshold = threshold.unwrap_or(config.model.delta);
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(CliError::Validation(format!("threshold must be finite and non-negative, got {threshold}")));
    }
    let report = evaluate_with_threshold(&params, &subjects, &config.model, threshold)?;
    let baseline = if baseline {
        let fresh = DsbnParams::init(&mut ChaCha8Rng::seed_from_u64(config.seed), &config.model)?;
        let base = evaluate_with_threshold(&fresh, &subjects, &config.model, threshold)?;
        Some(BaselineJson {
            recon_mae: base.recon_mae,
            ratio: report.recon_mae / base.recon_mae,
        })
    } else {
        None
    };
    Ok(EvalJson {
        n_subjects: subjects.len(),
        threshold,
        metrics: MetricsJson::from_report(&report),
        baseline,
    })
}

// ---------------------------------------------------------------- reconstruct

/// Writes the thresholded predicted structural graph of every subject to
/// `paths.out_dir/subject_<i>.json`. Returns the files written.
pub fn cmd_reconstruct(config: &RunConfig, threshold: Option<f64>) -> CliResult<Vec<PathBuf>> {
    let out_dir = required(&config.paths.out_dir, "output directory", "--out-dir")?.to_path_buf();
    let (params, subjects) = checkpoint_inputs(config)?;
    let threshold = threshold.unwrap_or(config.model.delta);
    ensure_dir(&out_dir)?;
    let mut written = Vec::with_capacity(subjects.len());
    for (i, s) in subjects.iter().enumerate() {
        let adj = reconstruct(&params, s, &config.model, threshold)?;
        let path = out_dir.join(format!("subject_{i:04}.json"));
        write_json(&path, &GraphFile::from_tensor(&adj, None))?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------- saliency

/// Writes the top-`model.top_k` node ranking of every subject for `class`
/// (or every class) to `paths.out_dir/subject_<i>_class_<c>.json`.
pub fn cmd_saliency(config: &RunConfig, class: Option<usize>) -> CliResult<Vec<PathBuf>> {
    let out_dir = required(&config.paths.out_dir, "output directory", "--out-dir")?.to_path_buf();
    if config.model.task != Task::Classification {
        return Err(CliError::Validation("saliency maps are defined for classification models only".into()));
    }
    let classes: Vec<usize> = match class {
        Some(c) if c >= config.model.n_classes => {
            return Err(CliError::Validation(format!(
                "class {c} out of range for {} classes",
                config.model.n_classes
            )))
        }
        Some(c) => vec![c],
        None => (0..config.model.n_classes).collect(),
    };
    let (params, subjects) = checkpoint_inputs(config)?;
    ensure_dir(&out_dir)?;
    let mut written = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        let out = predict(&params, &s.graph, &config.model)?;
        for &c in &classes {
            let entries = saliency_map(&out.latents, &params.mlp, config.model.task, c, config.model.top_k)?;
            let path = out_dir.join(format!("subject_{i:04}_class_{c}.json"));
            write_json(&path, &saliency_records(&entries))?;
            written.push(path);
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------- gradcheck

/// A small random subject: signed weights in (-1, 1) with small magnitudes
/// pruned, one guaranteed positive edge, uniform features and structure.
pub fn random_subject<R: Rng + ?Sized>(rng: &mut R, n: usize, feature_dim: usize, label: usize) -> CliResult<Subject> {
    let mut functional = Tensor::zeros(n, n);
    let mut structural = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let w: f64 = rng.random_range(-1.0..1.0);
            let w = if w.abs() < 0.2 { 0.0 } else { w };
            functional.set(i, j, w);
            functional.set(j, i, w);
            let v = rng.random_range(0.0..1.0);
            structural.set(i, j, v);
            structural.set(j, i, v);
        }
    }
    functional.set(0, 1, 0.9);
    functional.set(1, 0, 0.9);
    let features = Tensor::from_fn(n, feature_dim, |_, _| rng.random_range(-1.0..1.0));
    Ok(Subject::new(
        SignedGraph::new(functional, Some(features))?,
        UnsignedGraph::new(structural)?,
        Some(label),
        Some(rng.random_range(0.0..2.0)),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckCase {
    pub task: Task,
    pub t_layers: usize,
    pub report: GradCheckReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSummary {
    pub tol: f64,
    pub cases: Vec<GradcheckCase>,
}

impl GradcheckSummary {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.report.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.cases.iter().map(|c| c.report.max_rel_error).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradcheckSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            writeln!(
                f,
                "{:<14} t={}  max rel error {:.3e}  worst {}  {}",
                c.task.name(),
                c.t_layers,
                c.report.max_rel_error,
                c.report.worst.as_deref().unwrap_or("-"),
                if c.report.passed { "ok" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "{} (max rel error {:.3e}, tol {:.1e})",
            if self.passed() { "passed" } else { "failed" },
            self.max_rel_error(),
            self.tol
        )
    }
}

/// Central-difference check of the full loss of both task variants at
/// `t_layers` 1, 2 and 3 on random 4-node subjects. The model shape other
/// than task and depth comes from `config.model`.
pub fn cmd_gradcheck(config: &RunConfig, tol: f64) -> CliResult<GradcheckSummary> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Validation(format!("tol must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cases = Vec::new();
    for task in [Task::Classification, Task::Regression] {
        for t_layers in 1..=3 {
            let model = DsbnConfig {
                task,
                t_layers,
                ..config.model.clone()
            };
            let label = rng.random_range(0..model.n_classes);
            let subject = random_subject(&mut rng, GRADCHECK_NODES, model.feature_dim, label)?;
            let subject = PreparedSubject::new(&subject)?;
            let params = DsbnParams::init(&mut rng, &model)?;
            let report = check_subject_gradients(&params, &subject, &model, GRADCHECK_STEP, tol)?;
            cases.push(GradcheckCase { task, t_layers, report });
        }
    }
    Ok(GradcheckSummary { tol, cases })
}
