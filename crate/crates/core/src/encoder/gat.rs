use alloc::vec::Vec;

use super::attention::{scored, AttentionMap};
use super::params::GatLayerParams;
use super::{EncoderGraph, EncoderOptions, PairList};
use crate::autodiff::{Tape, Var};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// One graph-attention layer over the nonzero entries of an unsigned
/// adjacency (given as `pairs`). Isolated nodes get a zero row.
pub fn gat_layer(
    tape: &mut Tape,
    pairs: &PairList,
    n: usize,
    h: Var,
    params: &GatLayerParams<Var>,
    opts: EncoderOptions,
) -> Result<(Var, Var)> {
    let hw = tape.matmul(h, params.w)?;
    let mut scores = scored(tape, hw, &pairs.src, hw, &pairs.dst, &pairs.src, n, params.attn)?;
    let att = scores;
    if opts.edge_weighted {
        let w = tape.constant(Tensor::from_vec(pairs.len(), 1, pairs.weight.clone())?);
        scores = tape.mul(scores, w)?;
    }
    let gathered = tape.gather_rows(hw, &pairs.dst)?;
    let weighted = tape.scale_rows(gathered, scores)?;
    let summed = tape.segment_sum(weighted, &pairs.src, n)?;
    Ok((tape.elu(summed), att))
}

#[derive(Debug, Clone)]
pub struct PneOutput {
    pub x_pos: Var,
    pub x_neg: Var,
    pub attention: Vec<AttentionMap>,
}

/// Positive/negative head: independent attention stacks on the positive
/// subgraph and on the magnitudes of the negative subgraph, both fed the
/// shared input features. Returns `concat_cols(x_pos, x_neg)`.
pub fn pne_encode(
    tape: &mut Tape,
    g: &EncoderGraph,
    h: Var,
    pos_layers: &[GatLayerParams<Var>],
    neg_layers: &[GatLayerParams<Var>],
    opts: EncoderOptions,
) -> Result<(Var, PneOutput)> {
    if pos_layers.is_empty() || pos_layers.len() != neg_layers.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "PNE stacks must be non-empty and of equal depth ({} vs {})",
            pos_layers.len(),
            neg_layers.len()
        )));
    }
    let mut attention = Vec::new();
    let mut run = |tape: &mut Tape, pairs: &PairList, layers: &[GatLayerParams<Var>], head| {
        let mut x = h;
        for (l, p) in layers.iter().enumerate() {
            let (next, scores) = gat_layer(tape, pairs, g.n, x, p, opts)?;
            attention.push(AttentionMap {
                head,
                layer: l + 1,
                segment: pairs.src.clone(),
                scores,
            });
            x = next;
        }
        Ok::<Var, Error>(x)
    };
    let x_pos = run(tape, &g.pos, pos_layers, "pne.pos")?;
    let x_neg = run(tape, &g.neg, neg_layers, "pne.neg")?;
    let latent = tape.concat_cols(x_pos, x_neg)?;
    Ok((
        latent,
        PneOutput {
            x_pos,
            x_neg,
            attention,
        },
    ))
}
