//! Full model: encoder, inner-product decoder, sum readout, MLP head,
//! losses, saliency and evaluation metrics.

mod loss;
mod metrics;
mod saliency;

pub use loss::{reconstruction_loss, subject_loss, supervised_loss, total_loss, LossTerms};
pub use metrics::{
    classification_metrics, evaluate, evaluate_with_threshold, reconstruct, reconstruction_mae,
    regression_mae, threshold_reconstruction, ClassificationReport, EvalReport,
};
pub use saliency::{node_contributions, per_node_inputs, saliency_map, SaliencyEntry};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autodiff::{gradient_check, GradCheckReport, Tape, Var};
use crate::encoder::{
    bue_encode, pne_encode, sge_fuse, xavier_uniform, AttentionMap, EncoderGraph, EncoderOptions,
    SgeDims, SgeParams,
};
use crate::graph::{normalize_functional, normalize_structural, Subject};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

/// Model variants: the full model or one component removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    Full,
    NoBue,
    NoPne,
    NoRecon,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::NoBue, Ablation::NoPne, Ablation::NoRecon];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoBue => "no_bue",
            Ablation::NoPne => "no_pne",
            Ablation::NoRecon => "no_recon",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "classification" => Some(Task::Classification),
            "regression" => Some(Task::Regression),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsbnConfig {
    /// Encoder depth `T`.
    pub t_layers: usize,
    /// Node feature width at the input.
    pub feature_dim: usize,
    /// Width of every encoder layer.
    pub hidden_dim: usize,
    /// Latent width `k`; each fusion projection has width `k / 2`.
    pub latent_dim: usize,
    /// Hidden widths of the MLP head; empty means a single linear layer.
    pub mlp_widths: Vec<usize>,
    pub task: Task,
    pub n_classes: usize,
    /// Reconstruction loss weight.
    pub eta1: f64,
    /// Supervised loss weight.
    pub eta2: f64,
    /// Perturbation added to structural targets, and the evaluation threshold.
    pub delta: f64,
    pub ablation: Ablation,
    pub top_k: usize,
    pub encoder: EncoderOptions,
}

impl Default for DsbnConfig {
    fn default() -> Self {
        Self::classification()
    }
}

impl DsbnConfig {
    /// Classification defaults: `eta1 = 0.1`, `eta2 = 1`.
    pub fn classification() -> Self {
        Self {
            t_layers: 3,
            feature_dim: 5,
            hidden_dim: 8,
            latent_dim: 8,
            mlp_widths: vec![32],
            task: Task::Classification,
            n_classes: 2,
            eta1: 0.1,
            eta2: 1.0,
            delta: 0.05,
            ablation: Ablation::Full,
            top_k: 10,
            encoder: EncoderOptions::default(),
        }
    }

    /// Regression defaults: `eta1 = 0.5`, `eta2 = 1`.
    pub fn regression() -> Self {
        Self {
            task: Task::Regression,
            eta1: 0.5,
            ..Self::classification()
        }
    }

    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classification => Self::classification(),
            Task::Regression => Self::regression(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.t_layers == 0 {
            return bad("t_layers must be at least 1".into());
        }
        if !(self.eta1 >= 0.0 && self.eta2 >= 0.0) {
            return bad(format!("loss weights must be non-negative ({}, {})", self.eta1, self.eta2));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 0.5), got {}", self.delta));
        }
        if self.latent_dim < 2 || !self.latent_dim.is_multiple_of(2) {
            return bad(format!("latent_dim must be even and >= 2, got {}", self.latent_dim));
        }
        if self.feature_dim == 0 || self.hidden_dim == 0 || self.mlp_widths.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if self.task == Task::Classification && self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        Ok(())
    }

    /// Reconstruction weight actually applied; `no_recon` zeroes it.
    pub fn effective_eta1(&self) -> f64 {
        if self.ablation == Ablation::NoRecon {
            0.0
        } else {
            self.eta1
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.task {
            Task::Classification => self.n_classes,
            Task::Regression => 1,
        }
    }

    pub fn sge_dims(&self) -> SgeDims {
        SgeDims {
            in_dim: self.feature_dim,
            hidden: self.hidden_dim,
            layers: self.t_layers,
            proj: self.latent_dim / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<P = Tensor> {
    pub w: P,
    pub b: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<P = Tensor> {
    pub layers: Vec<DenseParams<P>>,
}

/// Every trainable tensor of the model, addressable by stable names.
#[derive(Debug, Clone, PartialEq)]
pub struct DsbnParams<P = Tensor> {
    pub sge: SgeParams<P>,
    pub mlp: MlpParams<P>,
}

impl<P> MlpParams<P> {
    pub fn map<Q, F: FnMut(&P) -> Q>(&self, f: &mut F) -> MlpParams<Q> {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| DenseParams { w: f(&l.w), b: f(&l.b) })
                .collect(),
        }
    }

    pub fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a P)>) {
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.{i}.w"), &l.w));
            out.push((format!("{prefix}.{i}.b"), &l.b));
        }
    }

    pub fn named_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut P)>) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("{prefix}.{i}.w"), &mut l.w));
            out.push((format!("{prefix}.{i}.b"), &mut l.b));
        }
    }
}

impl MlpParams {
    /// Dense layers `input → widths… → output`, Xavier weights, zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, input: usize, widths: &[usize], output: usize) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(widths);
        dims.push(output);
        let layers = dims
            .windows(2)
            .map(|w| DenseParams {
                w: xavier_uniform(rng, w[0], w[1]),
                b: Tensor::zeros(1, w[1]),
            })
            .collect();
        Self { layers }
    }
}

impl<P> DsbnParams<P> {
    pub fn map<Q, F: FnMut(&P) -> Q>(&self, f: &mut F) -> DsbnParams<Q> {
        DsbnParams {
            sge: self.sge.map(f),
            mlp: self.mlp.map(f),
        }
    }

    pub fn named(&self) -> Vec<(String, &P)> {
        let mut out = Vec::new();
        self.sge.named("sge", &mut out);
        self.mlp.named("mlp", &mut out);
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut P)> {
        let mut out = Vec::new();
        self.sge.named_mut("sge", &mut out);
        self.mlp.named_mut("mlp", &mut out);
        out
    }
}

impl DsbnParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, config: &DsbnConfig) -> Result<Self> {
        config.validate()?;
        let sge = SgeParams::init(rng, config.sge_dims());
        let mlp = MlpParams::init(rng, config.latent_dim, &config.mlp_widths, config.output_dim());
        Ok(Self { sge, mlp })
    }

    /// Registers every tensor as a differentiable leaf.
    pub fn register(&self, tape: &mut Tape) -> DsbnParams<Var> {
        self.map(&mut |t: &Tensor| tape.leaf(t.clone()))
    }

    pub fn to_named(&self) -> Vec<(String, Tensor)> {
        self.named().into_iter().map(|(n, t)| (n, t.clone())).collect()
    }

    /// Overwrites every parameter from `entries`; names and shapes must match
    /// the layout implied by the current values exactly.
    pub fn load_named(&mut self, entries: &[(String, Tensor)]) -> Result<()> {
        let mut slots = self.named_mut();
        if slots.len() != entries.len() {
            return Err(Error::ParamMismatch(format!(
                "expected {} tensors, got {}",
                slots.len(),
                entries.len()
            )));
        }
        for (name, slot) in slots.iter_mut() {
            let (_, value) = entries
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::ParamMismatch(format!("missing tensor {name}")))?;
            if value.shape() != slot.shape() {
                return Err(Error::ParamMismatch(format!(
                    "{name}: expected {}x{}, got {}x{}",
                    slot.rows(),
                    slot.cols(),
                    value.rows(),
                    value.cols()
                )));
            }
            **slot = value.clone();
        }
        Ok(())
    }
}

/// A subject after preprocessing: normalized graphs and encoder index lists.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSubject {
    pub graph: EncoderGraph,
    /// Normalized structural adjacency.
    pub target: Tensor,
    pub label: Option<usize>,
    pub score: Option<f64>,
}

impl PreparedSubject {
    pub fn new(subject: &Subject) -> Result<Self> {
        let functional = normalize_functional(&subject.functional)?;
        let structural = normalize_structural(&subject.structural)?;
        Ok(Self {
            graph: EncoderGraph::new(&functional)?,
            target: structural.adj().clone(),
            label: subject.label,
            score: subject.score,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }
}

/// Handles to the recorded forward pass of one subject.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub latents: Var,
    pub recon: Var,
    pub readout: Var,
    /// Log-probabilities (`1×C`) or the regression output (`1×1`).
    pub prediction: Var,
    pub attention: Vec<AttentionMap>,
}

/// Column-wise sum over nodes, `1×k`.
pub fn readout(tape: &mut Tape, latents: Var) -> Result<Var> {
    let n = tape.shape(latents)[0];
    tape.segment_sum(latents, &vec![0; n], 1)
}

/// `sigmoid(x_i · x_j)` for every ordered pair.
pub fn decode_structural(tape: &mut Tape, latents: Var) -> Result<Var> {
    let t = tape.transpose(latents);
    let gram = tape.matmul(latents, t)?;
    Ok(tape.sigmoid(gram))
}

/// Dense layers with elu between them; log-softmax on top for
/// classification.
pub fn mlp_head(tape: &mut Tape, x: Var, mlp: &MlpParams<Var>, task: Task) -> Result<Var> {
    let mut h = x;
    let last = mlp.layers.len().saturating_sub(1);
    for (i, layer) in mlp.layers.iter().enumerate() {
        let z = tape.matmul(h, layer.w)?;
        h = tape.add(z, layer.b)?;
        if i != last {
            h = tape.elu(h);
        }
    }
    Ok(match task {
        Task::Classification => tape.log_softmax(h),
        Task::Regression => h,
    })
}

pub fn forward(
    tape: &mut Tape,
    params: &DsbnParams<Var>,
    g: &EncoderGraph,
    config: &DsbnConfig,
) -> Result<ForwardVars> {
    if g.feature_dim() != config.feature_dim {
        return Err(Error::InvalidConfig(format!(
            "graph has {} node features, model expects {}",
            g.feature_dim(),
            config.feature_dim
        )));
    }
    let h = tape.constant(g.features.clone());
    let mut attention = Vec::new();
    let x_bue = if config.ablation == Ablation::NoBue {
        None
    } else {
        let (latent, out) = bue_encode(tape, g, h, &params.sge.bue_layers, config.encoder)?;
        attention.extend(out.attention);
        Some(latent)
    };
    let x_pne = if config.ablation == Ablation::NoPne {
        None
    } else {
        let (latent, out) = pne_encode(
            tape,
            g,
            h,
            &params.sge.pne_pos_layers,
            &params.sge.pne_neg_layers,
            config.encoder,
        )?;
        attention.extend(out.attention);
        Some(latent)
    };
    let latents = sge_fuse(tape, x_bue, x_pne, params.sge.fuse_w_bue, params.sge.fuse_w_pne, g.n)?;
    let recon = decode_structural(tape, latents)?;
    let pooled = readout(tape, latents)?;
    let prediction = mlp_head(tape, pooled, &params.mlp, config.task)?;
    Ok(ForwardVars {
        latents,
        recon,
        readout: pooled,
        prediction,
        attention,
    })
}

/// Plain values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub latents: Tensor,
    pub recon: Tensor,
    pub prediction: Tensor,
}

pub fn predict(params: &DsbnParams, g: &EncoderGraph, config: &DsbnConfig) -> Result<ModelOutput> {
    let mut tape = Tape::new();
    let vars = params.map(&mut |t: &Tensor| tape.constant(t.clone()));
    let out = forward(&mut tape, &vars, g, config)?;
    Ok(ModelOutput {
        latents: tape.value(out.latents).clone(),
        recon: tape.value(out.recon).clone(),
        prediction: tape.value(out.prediction).clone(),
    })
}

impl ModelOutput {
    /// Argmax class (classification) or `None`.
    pub fn predicted_class(&self, task: Task) -> Option<usize> {
        (task == Task::Classification).then(|| argmax(self.prediction.row(0)))
    }
}

/// Index of the largest entry; the first one wins ties.
pub(crate) fn argmax(row: &[f64]) -> usize {
    (0..row.len()).fold(0, |best, c| if row[c] > row[best] { c } else { best })
}

/// Central-difference check of the full training loss of one subject with
/// respect to every parameter.
pub fn check_subject_gradients(
    params: &DsbnParams,
    subject: &PreparedSubject,
    config: &DsbnConfig,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let named = params.to_named();
    gradient_check(
        |tape, vars| {
            let mut p = params.map(&mut |_| vars[0]);
            for ((_, slot), v) in p.named_mut().into_iter().zip(vars) {
                *slot = *v;
            }
            Ok(subject_loss(tape, &p, subject, config)?.total)
        },
        &named,
        h,
        tol,
    )
}

#[cfg(test)]
mod tests;
