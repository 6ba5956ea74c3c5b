use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::tensor::Tensor;

/// Weights of one balanced/unbalanced layer. `P` is [`Tensor`] for stored
/// values and [`Var`](crate::autodiff::Var) once registered on a tape.
#[derive(Debug, Clone, PartialEq)]
pub struct BueLayerParams<P = Tensor> {
    pub w_bal: P,
    pub w_unbal: P,
    /// `2·d_out × 1`; first half scores the query node, second the neighbor.
    pub attn_bal: P,
    pub attn_unbal: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams<P = Tensor> {
    pub w: P,
    pub attn: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgeParams<P = Tensor> {
    pub bue_layers: Vec<BueLayerParams<P>>,
    pub pne_pos_layers: Vec<GatLayerParams<P>>,
    pub pne_neg_layers: Vec<GatLayerParams<P>>,
    pub fuse_w_bue: P,
    pub fuse_w_pne: P,
}

/// Layer widths of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SgeDims {
    pub in_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Width of each fusion projection; the latent width is twice this.
    pub proj: usize,
}

/// Uniform in `[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let s = math::sqrt(6.0 / (rows + cols) as f64);
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(-s..=s))
}

impl<P> BueLayerParams<P> {
    pub fn map<Q, F: FnMut(&P) -> Q>(&self, f: &mut F) -> BueLayerParams<Q> {
        BueLayerParams {
            w_bal: f(&self.w_bal),
            w_unbal: f(&self.w_unbal),
            attn_bal: f(&self.attn_bal),
            attn_unbal: f(&self.attn_unbal),
        }
    }

    pub fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a P)>) {
        out.push((format!("{prefix}.w_bal"), &self.w_bal));
        out.push((format!("{prefix}.w_unbal"), &self.w_unbal));
        out.push((format!("{prefix}.attn_bal"), &self.attn_bal));
        out.push((format!("{prefix}.attn_unbal"), &self.attn_unbal));
    }

    pub fn named_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut P)>) {
        out.push((format!("{prefix}.w_bal"), &mut self.w_bal));
        out.push((format!("{prefix}.w_unbal"), &mut self.w_unbal));
        out.push((format!("{prefix}.attn_bal"), &mut self.attn_bal));
        out.push((format!("{prefix}.attn_unbal"), &mut self.attn_unbal));
    }
}

impl BueLayerParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> Self {
        Self {
            w_bal: xavier_uniform(rng, d_in, d_out),
            w_unbal: xavier_uniform(rng, d_in, d_out),
            attn_bal: xavier_uniform(rng, 2 * d_out, 1),
            attn_unbal: xavier_uniform(rng, 2 * d_out, 1),
        }
    }
}

impl<P> GatLayerParams<P> {
    pub fn map<Q, F: FnMut(&P) -> Q>(&self, f: &mut F) -> GatLayerParams<Q> {
        GatLayerParams {
            w: f(&self.w),
            attn: f(&self.attn),
        }
    }

    pub fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a P)>) {
        out.push((format!("{prefix}.w"), &self.w));
        out.push((format!("{prefix}.attn"), &self.attn));
    }

    pub fn named_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut P)>) {
        out.push((format!("{prefix}.w"), &mut self.w));
        out.push((format!("{prefix}.attn"), &mut self.attn));
    }
}

impl GatLayerParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> Self {
        Self {
            w: xavier_uniform(rng, d_in, d_out),
            attn: xavier_uniform(rng, 2 * d_out, 1),
        }
    }
}

impl<P> SgeParams<P> {
    pub fn depth(&self) -> usize {
        self.bue_layers.len()
    }

    pub fn map<Q, F: FnMut(&P) -> Q>(&self, f: &mut F) -> SgeParams<Q> {
        SgeParams {
            bue_layers: self.bue_layers.iter().map(|l| l.map(f)).collect(),
            pne_pos_layers: self.pne_pos_layers.iter().map(|l| l.map(f)).collect(),
            pne_neg_layers: self.pne_neg_layers.iter().map(|l| l.map(f)).collect(),
            fuse_w_bue: f(&self.fuse_w_bue),
            fuse_w_pne: f(&self.fuse_w_pne),
        }
    }

    pub fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a P)>) {
        for (l, p) in self.bue_layers.iter().enumerate() {
            p.named(&format!("{prefix}.bue.{l}"), out);
        }
        for (l, p) in self.pne_pos_layers.iter().enumerate() {
            p.named(&format!("{prefix}.pne_pos.{l}"), out);
        }
        for (l, p) in self.pne_neg_layers.iter().enumerate() {
            p.named(&format!("{prefix}.pne_neg.{l}"), out);
        }
        out.push((format!("{prefix}.fuse_w_bue"), &self.fuse_w_bue));
        out.push((format!("{prefix}.fuse_w_pne"), &self.fuse_w_pne));
    }

    pub fn named_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut P)>) {
        for (l, p) in self.bue_layers.iter_mut().enumerate() {
            p.named_mut(&format!("{prefix}.bue.{l}"), out);
        }
        for (l, p) in self.pne_pos_layers.iter_mut().enumerate() {
            p.named_mut(&format!("{prefix}.pne_pos.{l}"), out);
        }
        for (l, p) in self.pne_neg_layers.iter_mut().enumerate() {
            p.named_mut(&format!("{prefix}.pne_neg.{l}"), out);
        }
        out.push((format!("{prefix}.fuse_w_bue"), &mut self.fuse_w_bue));
        out.push((format!("{prefix}.fuse_w_pne"), &mut self.fuse_w_pne));
    }
}

impl SgeParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, dims: SgeDims) -> Self {
        let width = |l: usize| if l == 0 { dims.in_dim } else { dims.hidden };
        let bue_layers = (0..dims.layers)
            .map(|l| BueLayerParams::init(rng, width(l), dims.hidden))
            .collect();
        let pne_pos_layers = (0..dims.layers)
            .map(|l| GatLayerParams::init(rng, width(l), dims.hidden))
            .collect();
        let pne_neg_layers = (0..dims.layers)
            .map(|l| GatLayerParams::init(rng, width(l), dims.hidden))
            .collect();
        Self {
            bue_layers,
            pne_pos_layers,
            pne_neg_layers,
            fuse_w_bue: xavier_uniform(rng, 2 * dims.hidden, dims.proj),
            fuse_w_pne: xavier_uniform(rng, 2 * dims.hidden, dims.proj),
        }
    }
}
