//! Signed graph encoder: balanced/unbalanced head, positive/negative head,
//! and the projection that fuses them into node latents.
//!
//! All layers are recorded on a [`Tape`]; parameters enter as [`Var`]s so the
//! same code serves training, evaluation and gradient checks.

mod attention;
mod bue;
mod gat;
mod params;

pub use attention::{attention_scores, AttentionMap, LEAKY_SLOPE};
pub use bue::{bue_encode, bue_initial, bue_subsequent, BueOutput};
pub use gat::{gat_layer, pne_encode, PneOutput};
pub use params::{xavier_uniform, BueLayerParams, GatLayerParams, SgeDims, SgeParams};

use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::graph::{neighbor_sets, SignedGraph, UnsignedGraph};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Which component of node `i` queries a neighbor reached across a
/// negative edge in layers after the first.
///
/// With `Own`, every coefficient feeding a branch uses that branch's own
/// feature of node `i` as the query, so the shared query term cancels in
/// the per-node softmax. `Mirrored` uses node `i`'s opposite component for
/// the negative-edge family, exactly as the cross coefficients are written
/// in the original formulation; it lets odd-parity information reach the
/// balanced component through the attention weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuerySource {
    #[default]
    Own,
    Mirrored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EncoderOptions {
    pub query: QuerySource,
    /// Multiply normalized attention scores by `|a_ij|`. Off by default:
    /// aggregation weights are then learned attention exclusively.
    pub edge_weighted: bool,
}

/// Directed (source, destination) pairs; one entry per neighbor relation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairList {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// `|a_ij|` for each pair.
    pub weight: Vec<f64>,
}

impl PairList {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    /// Pairs for every nonzero entry of an unsigned adjacency.
    pub fn from_unsigned(g: &UnsignedGraph) -> Self {
        let mut out = PairList::default();
        let adj = g.adj();
        for i in 0..g.n() {
            for j in 0..g.n() {
                let w = adj.get(i, j);
                if w != 0.0 {
                    out.src.push(i);
                    out.dst.push(j);
                    out.weight.push(w.abs());
                }
            }
        }
        out
    }

    fn from_lists(lists: &[Vec<usize>], adj: &Tensor) -> Self {
        let mut out = PairList::default();
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                out.src.push(i);
                out.dst.push(j);
                out.weight.push(adj.get(i, j).abs());
            }
        }
        out
    }
}

/// A normalized signed graph with its neighbor structure laid out as index
/// lists for the tape primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGraph {
    pub n: usize,
    pub features: Tensor,
    /// Pairs `(i, j)` with `j` in `N_i^+`.
    pub pos: PairList,
    /// Pairs `(i, k)` with `k` in `N_i^-`.
    pub neg: PairList,
}

impl EncoderGraph {
    /// Builds the index lists from a graph that carries node features.
    pub fn new(g: &SignedGraph) -> Result<Self> {
        let features = g
            .features()
            .cloned()
            .ok_or_else(|| Error::InvalidGraph("node features are required".into()))?;
        let ns = neighbor_sets(g);
        Ok(Self {
            n: g.n(),
            pos: PairList::from_lists(&ns.pos, g.adj()),
            neg: PairList::from_lists(&ns.neg, g.adj()),
            features,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }
}

/// Per-node concatenation of the two projections `[x_bue W_b, x_pne W_p]`.
/// A missing head (ablation) contributes a zero block of the same width.
pub fn sge_fuse(
    tape: &mut Tape,
    x_bue: Option<Var>,
    x_pne: Option<Var>,
    fuse_w_bue: Var,
    fuse_w_pne: Var,
    n: usize,
) -> Result<Var> {
    let project = |tape: &mut Tape, x: Option<Var>, w: Var| -> Result<Var> {
        match x {
            Some(x) => tape.matmul(x, w),
            None => {
                let width = tape.shape(w)[1];
                Ok(tape.constant(Tensor::zeros(n, width)))
            }
        }
    };
    let a = project(tape, x_bue, fuse_w_bue)?;
    let b = project(tape, x_pne, fuse_w_pne)?;
    tape.concat_cols(a, b)
}

/// Values read back from a tape for every attention map of a forward pass.
pub fn attention_values(tape: &Tape, maps: &[AttentionMap]) -> Vec<(AttentionMap, Vec<f64>)> {
    maps.iter()
        .map(|m| (m.clone(), tape.value(m.scores).data().to_vec()))
        .collect()
}
