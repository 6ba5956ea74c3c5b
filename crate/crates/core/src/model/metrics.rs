use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, predict, DsbnConfig, DsbnParams, PreparedSubject, Task};
use crate::autodiff::Tape;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Zeroes every entry strictly below `threshold`.
pub fn threshold_reconstruction(recon: &Tensor, threshold: f64) -> Tensor {
    recon.map(|x| if x < threshold { 0.0 } else { x })
}

/// Mean absolute difference over ordered off-diagonal pairs.
pub fn reconstruction_mae(recon: &Tensor, target: &Tensor) -> Result<f64> {
    if recon.shape() != target.shape() || recon.rows() != recon.cols() {
        return Err(Error::ShapeMismatch {
            op: "reconstruction_mae",
            lhs: recon.shape(),
            rhs: target.shape(),
        });
    }
    let n = recon.rows();
    if n < 2 {
        return Err(Error::EmptyInput("off-diagonal pairs"));
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += (recon.get(i, j) - target.get(i, j)).abs();
            }
        }
    }
    Ok(sum / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// Unweighted mean over classes; a class never predicted has precision 0.
    pub precision: f64,
    /// Unweighted mean over classes; 0 for a class whose precision and
    /// recall are both 0.
    pub f1: f64,
}

pub fn classification_metrics(
    predicted: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<ClassificationReport> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            op: "classification_metrics",
            lhs: [predicted.len(), 1],
            rhs: [truth.len(), 1],
        });
    }
    if let Some(&c) = predicted.iter().chain(truth).find(|&&c| c >= n_classes) {
        return Err(Error::InvalidConfig(alloc::format!(
            "class {c} out of range for {n_classes} classes"
        )));
    }
    // confusion[t][p]
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let mut precision = 0.0;
    let mut f1 = 0.0;
    for c in 0..n_classes {
        let tp = confusion[c][c] as f64;
        let predicted_c: usize = (0..n_classes).map(|t| confusion[t][c]).sum();
        let actual_c: usize = confusion[c].iter().sum();
        let p = if predicted_c > 0 { tp / predicted_c as f64 } else { 0.0 };
        let r = if actual_c > 0 { tp / actual_c as f64 } else { 0.0 };
        precision += p;
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    Ok(ClassificationReport {
        accuracy: correct as f64 / predicted.len() as f64,
        precision: precision / n_classes as f64,
        f1: f1 / n_classes as f64,
    })
}

pub fn regression_mae(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            op: "regression_mae",
            lhs: [predicted.len(), 1],
            rhs: [truth.len(), 1],
        });
    }
    let sum: f64 = predicted.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(sum / predicted.len() as f64)
}

/// Metrics of a parameter set on a group of subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub classification: Option<ClassificationReport>,
    pub mae: Option<f64>,
    /// Mean per-subject reconstruction MAE after thresholding at `delta`.
    pub recon_mae: f64,
    /// Mean total loss.
    pub loss: f64,
    /// Mean unweighted reconstruction loss.
    pub recon_loss: f64,
    /// Mean supervised loss.
    pub supervised_loss: f64,
}

impl EvalReport {
    /// The headline task metric: accuracy or MAE.
    pub fn task_metric(&self) -> f64 {
        match (self.classification, self.mae) {
            (Some(c), _) => c.accuracy,
            (None, Some(m)) => m,
            (None, None) => f64::NAN,
        }
    }
}

pub fn evaluate(params: &DsbnParams, subjects: &[PreparedSubject], config: &DsbnConfig) -> Result<EvalReport> {
    evaluate_with_threshold(params, subjects, config, config.delta)
}

/// [`evaluate`] with reconstructions thresholded at `threshold` instead of
/// the model's `delta` before the MAE is taken.
pub fn evaluate_with_threshold(
    params: &DsbnParams,
    subjects: &[PreparedSubject],
    config: &DsbnConfig,
    threshold: f64,
) -> Result<EvalReport> {
    if subjects.is_empty() {
        return Err(Error::EmptyInput("subjects"));
    }
    let mut classes = Vec::new();
    let mut labels = Vec::new();
    let mut outputs = Vec::new();
    let mut scores = Vec::new();
    let mut recon_mae = 0.0;
    let (mut loss, mut recon_loss, mut supervised_loss) = (0.0, 0.0, 0.0);
    for s in subjects {
        let mut tape = Tape::new();
        let vars = params.map(&mut |t: &Tensor| tape.constant(t.clone()));
        let terms = super::subject_loss(&mut tape, &vars, s, config)?;
        loss += tape.value(terms.total).item();
        recon_loss += tape.value(terms.recon).item();
        supervised_loss += tape.value(terms.supervised).item();
        let recon = tape.value(terms.forward.recon);
        recon_mae += reconstruction_mae(&threshold_reconstruction(recon, threshold), &s.target)?;
        let prediction = tape.value(terms.forward.prediction);
        match config.task {
            Task::Classification => {
                classes.push(argmax(prediction.row(0)));
                labels.push(s.label.ok_or(Error::MissingTarget("label"))?);
            }
            Task::Regression => {
                outputs.push(prediction.item());
                scores.push(s.score.ok_or(Error::MissingTarget("score"))?);
            }
        }
    }
    let m = subjects.len() as f64;
    let (classification, mae) = match config.task {
        Task::Classification => (Some(classification_metrics(&classes, &labels, config.n_classes)?), None),
        Task::Regression => (None, Some(regression_mae(&outputs, &scores)?)),
    };
    Ok(EvalReport {
        task: config.task,
        classification,
        mae,
        recon_mae: recon_mae / m,
        loss: loss / m,
        recon_loss: recon_loss / m,
        supervised_loss: supervised_loss / m,
    })
}

/// Predicted structural graph of one subject with entries below
/// `threshold` zeroed.
pub fn reconstruct(
    params: &DsbnParams,
    subject: &PreparedSubject,
    config: &DsbnConfig,
    threshold: f64,
) -> Result<Tensor> {
    let out = predict(params, &subject.graph, config)?;
    Ok(threshold_reconstruction(&out.recon, threshold))
}
