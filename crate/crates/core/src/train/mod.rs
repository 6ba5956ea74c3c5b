//! Optimization: Adam with coupled L2, polynomial learning-rate decay,
//! early stopping on validation loss, and k-fold cross-validation.

mod adam;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tape;
use crate::math;
use crate::model::{evaluate, subject_loss, DsbnConfig, DsbnParams, EvalReport, PreparedSubject};
use crate::seed::derive_seed;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Exponent of the learning-rate decay.
pub const LR_POWER: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub k_folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            lr0: 0.001,
            max_epochs: 500,
            patience: 100,
            weight_decay: 1e-5,
            seed: 0,
            k_folds: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg| Err(Error::InvalidConfig(msg));
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad(format!(
                "batch_size, max_epochs and patience must be positive ({}, {}, {})",
                self.batch_size, self.max_epochs, self.patience
            ));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(self.weight_decay > 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be positive, got {}", self.weight_decay));
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if self.k_folds < 2 {
            return bad(format!("k_folds must be at least 2, got {}", self.k_folds));
        }
        Ok(())
    }
}

/// `lr0 · (1 − epoch / max_epochs)^0.9`, clamped to zero past the end.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    if epoch >= config.max_epochs {
        return 0.0;
    }
    let frac = 1.0 - epoch as f64 / config.max_epochs as f64;
    config.lr0 * math::powf(frac, LR_POWER)
}

/// Patience counter on a loss that must strictly decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: Option<usize>,
    /// Consecutive observations without improvement.
    pub stale: usize,
    seen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            stale: 0,
            seen: 0,
        }
    }

    /// Records one epoch's loss. A NaN loss never counts as an improvement.
    pub fn observe(&mut self, loss: f64) -> StopDecision {
        let epoch = self.seen;
        self.seen += 1;
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.stale = 0;
            StopDecision {
                improved: true,
                stop: false,
            }
        } else {
            self.stale += 1;
            StopDecision {
                improved: false,
                stop: self.stale >= self.patience,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffles `0..n` under `seed` and cuts it into `k` contiguous folds; the
/// first `n % k` folds hold one extra item. Index lists are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidConfig(format!("cannot split {n} items into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut validation = order[start..start + len].to_vec();
        validation.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + len..]).copied().collect();
        train.sort_unstable();
        folds.push(Fold { train, validation });
        start += len;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean total loss over the epoch's training subjects, measured during
    /// the forward passes that produced the updates.
    pub train_loss: f64,
    /// Mean unweighted reconstruction loss over the same passes.
    pub train_recon_loss: f64,
    pub val_loss: f64,
    pub val_recon_loss: f64,
    /// Accuracy (classification) or MAE (regression) on validation.
    pub val_metric: f64,
    pub val_recon_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub params: DsbnParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Mean gradient of the total loss over `batch`, plus the summed total and
/// reconstruction losses.
fn batch_gradients(
    params: &DsbnParams,
    batch: &[&PreparedSubject],
    config: &DsbnConfig,
) -> Result<(Vec<Tensor>, f64, f64)> {
    let mut sums: Vec<Tensor> = params
        .named()
        .iter()
        .map(|(_, t)| Tensor::zeros(t.rows(), t.cols()))
        .collect();
    let (mut loss, mut recon) = (0.0, 0.0);
    for subject in batch {
        let mut tape = Tape::new();
        let vars = params.register(&mut tape);
        let terms = subject_loss(&mut tape, &vars, subject, config)?;
        loss += tape.value(terms.total).item();
        recon += tape.value(terms.recon).item();
        tape.backward(terms.total)?;
        for (sum, (_, var)) in sums.iter_mut().zip(vars.named()) {
            let g = tape.grad(*var);
            for (s, x) in sum.data_mut().iter_mut().zip(g.data()) {
                *s += x;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for sum in &mut sums {
        for s in sum.data_mut() {
            *s *= inv;
        }
    }
    Ok((sums, loss, recon))
}

/// Trains from a seeded initialization with mini-batch Adam, evaluates on
/// `validation` after every epoch, stops after `patience` epochs without a
/// strict decrease of validation loss, and returns the best parameters.
pub fn train(
    train_set: &[PreparedSubject],
    validation: &[PreparedSubject],
    config: &DsbnConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    train_config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation split"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut params = DsbnParams::init(&mut rng, config)?;
    let mut adam = AdamState::new(params.named().into_iter().map(|(_, t)| t));
    let mut stopper = EarlyStopping::new(train_config.patience);
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopped_early = false;

    for epoch in 0..train_config.max_epochs {
        let lr = lr_at(epoch, train_config);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut recon_sum) = (0.0, 0.0);
        for chunk in order.chunks(train_config.batch_size) {
            let batch: Vec<&PreparedSubject> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (grads, loss, recon) = batch_gradients(&params, &batch, config)?;
            loss_sum += loss;
            recon_sum += recon;
            let mut slots: Vec<&mut Tensor> = params.named_mut().into_iter().map(|(_, t)| t).collect();
            adam.step(&mut slots, &grads, lr, train_config.weight_decay)?;
        }
        let report = evaluate(&params, validation, config)?;
        let m = train_set.len() as f64;
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / m,
            train_recon_loss: recon_sum / m,
            val_loss: report.loss,
            val_recon_loss: report.recon_loss,
            val_metric: report.task_metric(),
            val_recon_mae: report.recon_mae,
        };
        log::debug!(
            "epoch {epoch}: lr {lr:.3e} train {:.5} val {:.5} metric {:.4}",
            record.train_loss,
            record.val_loss,
            record.val_metric
        );
        history.push(record);
        if !report.loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        let decision = stopper.observe(report.loss);
        if decision.improved {
            best = params.clone();
        }
        if decision.stop {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch: stopper.best_epoch.unwrap_or(0),
        stopped_early,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: math::sqrt(var),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub split: Fold,
    pub outcome: TrainOutcome,
    /// Best-epoch parameters evaluated on the fold's validation subjects.
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    /// Accuracy (classification) or MAE (regression).
    pub metric: MeanStd,
    pub precision: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub recon_mae: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<FoldResult>,
    pub summary: CvSummary,
}

/// Seed of fold `f`'s initialization and shuffling under `seed`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, fold as u64 + 1)
}

/// k-fold cross-validation: splits under the base seed, trains each fold
/// with its own derived seed, and summarizes validation metrics.
pub fn cross_validate(subjects: &[PreparedSubject], config: &DsbnConfig, train_config: &TrainConfig) -> Result<CvOutcome> {
    train_config.validate()?;
    let splits = kfold_split(subjects.len(), train_config.k_folds, train_config.seed)?;
    let mut folds = Vec::with_capacity(splits.len());
    for (f, split) in splits.into_iter().enumerate() {
        let pick = |idx: &[usize]| idx.iter().map(|&i| subjects[i].clone()).collect::<Vec<_>>();
        let (tr, va) = (pick(&split.train), pick(&split.validation));
        let tc = TrainConfig {
            seed: fold_seed(train_config.seed, f),
            ..train_config.clone()
        };
        let outcome = train(&tr, &va, config, &tc)?;
        let report = evaluate(&outcome.params, &va, config)?;
        log::info!(
            "fold {f}: best epoch {} metric {:.4} recon mae {:.4}",
            outcome.best_epoch,
            report.task_metric(),
            report.recon_mae
        );
        folds.push(FoldResult {
            fold: f,
            split,
            outcome,
            report,
        });
    }
    let collect = |f: &dyn Fn(&EvalReport) -> Option<f64>| -> Result<Option<MeanStd>> {
        let v: Option<Vec<f64>> = folds.iter().map(|r| f(&r.report)).collect();
        v.map(|v| MeanStd::of(&v)).transpose()
    };
    let summary = CvSummary {
        metric: MeanStd::of(&folds.iter().map(|r| r.report.task_metric()).collect::<Vec<_>>())?,
        precision: collect(&|r| r.classification.map(|c| c.precision))?,
        f1: collect(&|r| r.classification.map(|c| c.f1))?,
        recon_mae: MeanStd::of(&folds.iter().map(|r| r.report.recon_mae).collect::<Vec<_>>())?,
    };
    Ok(CvOutcome { folds, summary })
}
