use alloc::vec;

use super::{forward, DsbnConfig, DsbnParams, ForwardVars, PreparedSubject, Task};
use crate::autodiff::{Tape, Var};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Mean squared error between `recon` and `target + delta` over the
/// `n(n-1)` ordered off-diagonal pairs. Zero target entries are pulled
/// towards `delta` as well.
pub fn reconstruction_loss(tape: &mut Tape, recon: Var, target: &Tensor, delta: f64) -> Result<Var> {
    let [n, m] = tape.shape(recon);
    if target.shape() != [n, m] || n != m {
        return Err(Error::ShapeMismatch {
            op: "reconstruction_loss",
            lhs: [n, m],
            rhs: target.shape(),
        });
    }
    if n < 2 {
        return Err(Error::DegenerateGraph);
    }
    let shifted = tape.constant(Tensor::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            target.get(i, j) + delta
        }
    }));
    let mask = tape.constant(Tensor::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }));
    let masked = tape.mul(recon, mask)?;
    let diff = tape.sub(masked, shifted)?;
    let sq = tape.square(diff);
    let total = tape.sum_all(sq);
    Ok(tape.scale(total, 1.0 / (n * (n - 1)) as f64))
}

/// Negative log-likelihood of the true label (classification) or absolute
/// error (regression) for a single prediction row.
pub fn supervised_loss(
    tape: &mut Tape,
    prediction: Var,
    label: Option<usize>,
    score: Option<f64>,
    task: Task,
) -> Result<Var> {
    match task {
        Task::Classification => {
            let label = label.ok_or(Error::MissingTarget("label"))?;
            let classes = tape.shape(prediction)[1];
            if label >= classes {
                return Err(Error::InvalidConfig(alloc::format!(
                    "label {label} out of range for {classes} classes"
                )));
            }
            let mut onehot = vec![0.0; classes];
            onehot[label] = -1.0;
            let pick = tape.constant(Tensor::from_vec(classes, 1, onehot)?);
            tape.matmul(prediction, pick)
        }
        Task::Regression => {
            let score = score.ok_or(Error::MissingTarget("score"))?;
            let y = tape.constant(Tensor::scalar(score));
            let diff = tape.sub(prediction, y)?;
            Ok(tape.abs(diff))
        }
    }
}

/// `eta1 · recon + eta2 · supervised`.
pub fn total_loss(tape: &mut Tape, recon: Var, supervised: Var, eta1: f64, eta2: f64) -> Result<Var> {
    let a = tape.scale(recon, eta1);
    let b = tape.scale(supervised, eta2);
    tape.add(a, b)
}

/// The three loss terms of one subject plus the forward handles.
#[derive(Debug, Clone)]
pub struct LossTerms {
    pub recon: Var,
    pub supervised: Var,
    pub total: Var,
    pub forward: ForwardVars,
}

/// Runs the model on one subject and records its losses. The reconstruction
/// term is always computed; under `no_recon` it carries zero weight.
pub fn subject_loss(
    tape: &mut Tape,
    params: &DsbnParams<Var>,
    subject: &PreparedSubject,
    config: &DsbnConfig,
) -> Result<LossTerms> {
    let out = forward(tape, params, &subject.graph, config)?;
    let recon = reconstruction_loss(tape, out.recon, &subject.target, config.delta)?;
    let supervised = supervised_loss(tape, out.prediction, subject.label, subject.score, config.task)?;
    let total = total_loss(tape, recon, supervised, config.effective_eta1(), config.eta2)?;
    Ok(LossTerms {
        recon,
        supervised,
        total,
        forward: out,
    })
}
