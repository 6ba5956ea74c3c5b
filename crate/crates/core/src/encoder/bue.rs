//! Balanced/unbalanced head.
//!
//! Each node carries a balanced component (reached by walks with an even
//! number of negative edges) and an unbalanced one (odd). The first layer
//! aggregates the input features over positive neighbors into the balanced
//! component and over negative neighbors into the unbalanced one. Later
//! layers compose parities: the balanced output collects balanced features
//! across positive edges plus unbalanced features across negative edges,
//! and the unbalanced output mirrors that. In later layers each branch
//! normalizes its attention over the whole neighborhood `N_i^+ ∪ N_i^-`.

use alloc::vec::Vec;

use super::attention::{scored, AttentionMap};
use super::params::BueLayerParams;
use super::{EncoderGraph, EncoderOptions, PairList, QuerySource};
use crate::autodiff::{Tape, Var};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BueOutput {
    pub x_bal: Var,
    pub x_unbal: Var,
    pub attention: Vec<AttentionMap>,
}

fn aggregate(
    tape: &mut Tape,
    values: Var,
    index: &[usize],
    scores: Var,
    weight: Option<&[f64]>,
    segment: &[usize],
    n: usize,
) -> Result<Var> {
    let scores = match weight {
        Some(w) => {
            let w = tape.constant(Tensor::from_vec(w.len(), 1, w.to_vec())?);
            tape.mul(scores, w)?
        }
        None => scores,
    };
    let gathered = tape.gather_rows(values, index)?;
    let weighted = tape.scale_rows(gathered, scores)?;
    let summed = tape.segment_sum(weighted, segment, n)?;
    Ok(tape.elu(summed))
}

fn single_family(
    tape: &mut Tape,
    g: &EncoderGraph,
    h: Var,
    pairs: &PairList,
    w: Var,
    attn: Var,
    opts: EncoderOptions,
) -> Result<(Var, Var)> {
    let hw = tape.matmul(h, w)?;
    let scores = scored(tape, hw, &pairs.src, hw, &pairs.dst, &pairs.src, g.n, attn)?;
    let weight = opts.edge_weighted.then_some(pairs.weight.as_slice());
    let out = aggregate(tape, hw, &pairs.dst, scores, weight, &pairs.src, g.n)?;
    Ok((out, scores))
}

/// First layer: balanced component over `N_i^+`, unbalanced over `N_i^-`,
/// each with its own weight matrix and attention vector. Nodes without
/// neighbors of a sign get a zero row for that component.
pub fn bue_initial(
    tape: &mut Tape,
    g: &EncoderGraph,
    h: Var,
    params: &BueLayerParams<Var>,
    opts: EncoderOptions,
) -> Result<BueOutput> {
    let (x_bal, s_bal) = single_family(tape, g, h, &g.pos, params.w_bal, params.attn_bal, opts)?;
    let (x_unbal, s_unbal) =
        single_family(tape, g, h, &g.neg, params.w_unbal, params.attn_unbal, opts)?;
    Ok(BueOutput {
        x_bal,
        x_unbal,
        attention: alloc::vec![
            AttentionMap {
                head: "bue.bal",
                layer: 1,
                segment: g.pos.src.clone(),
                scores: s_bal,
            },
            AttentionMap {
                head: "bue.unbal",
                layer: 1,
                segment: g.neg.src.clone(),
                scores: s_unbal,
            },
        ],
    })
}

/// Index layout over the stacked matrix `[own; other]` (`2n` rows): positive
/// pairs read the own component, negative pairs read the other one.
struct UnionIndex {
    query: Vec<usize>,
    key: Vec<usize>,
    segment: Vec<usize>,
    weight: Vec<f64>,
}

impl UnionIndex {
    fn new(g: &EncoderGraph, query: QuerySource) -> Self {
        let n = g.n;
        let mut idx = UnionIndex {
            query: Vec::with_capacity(g.pos.len() + g.neg.len()),
            key: Vec::with_capacity(g.pos.len() + g.neg.len()),
            segment: Vec::with_capacity(g.pos.len() + g.neg.len()),
            weight: Vec::with_capacity(g.pos.len() + g.neg.len()),
        };
        for r in 0..g.pos.len() {
            idx.query.push(g.pos.src[r]);
            idx.key.push(g.pos.dst[r]);
            idx.segment.push(g.pos.src[r]);
            idx.weight.push(g.pos.weight[r]);
        }
        for r in 0..g.neg.len() {
            let i = g.neg.src[r];
            idx.query.push(match query {
                QuerySource::Own => i,
                QuerySource::Mirrored => n + i,
            });
            idx.key.push(n + g.neg.dst[r]);
            idx.segment.push(i);
            idx.weight.push(g.neg.weight[r]);
        }
        idx
    }
}

fn union_branch(
    tape: &mut Tape,
    g: &EncoderGraph,
    own: Var,
    other: Var,
    w: Var,
    attn: Var,
    idx: &UnionIndex,
    opts: EncoderOptions,
) -> Result<(Var, Var)> {
    let own_w = tape.matmul(own, w)?;
    let other_w = tape.matmul(other, w)?;
    let stack = tape.concat_rows(own_w, other_w)?;
    let scores = scored(tape, stack, &idx.query, stack, &idx.key, &idx.segment, g.n, attn)?;
    let weight = opts.edge_weighted.then_some(idx.weight.as_slice());
    let out = aggregate(tape, stack, &idx.key, scores, weight, &idx.segment, g.n)?;
    Ok((out, scores))
}

/// Layers after the first (`layer >= 2`).
pub fn bue_subsequent(
    tape: &mut Tape,
    g: &EncoderGraph,
    x_bal: Var,
    x_unbal: Var,
    params: &BueLayerParams<Var>,
    layer: usize,
    opts: EncoderOptions,
) -> Result<BueOutput> {
    if layer < 2 {
        return Err(Error::InvalidConfig(alloc::format!(
            "subsequent BUE layers start at index 2, got {layer}"
        )));
    }
    let idx = UnionIndex::new(g, opts.query);
    let (bal, s_bal) =
        union_branch(tape, g, x_bal, x_unbal, params.w_bal, params.attn_bal, &idx, opts)?;
    let (unbal, s_unbal) =
        union_branch(tape, g, x_unbal, x_bal, params.w_unbal, params.attn_unbal, &idx, opts)?;
    Ok(BueOutput {
        x_bal: bal,
        x_unbal: unbal,
        attention: alloc::vec![
            AttentionMap {
                head: "bue.bal",
                layer,
                segment: idx.segment.clone(),
                scores: s_bal,
            },
            AttentionMap {
                head: "bue.unbal",
                layer,
                segment: idx.segment,
                scores: s_unbal,
            },
        ],
    })
}

/// Runs the full stack and returns the per-layer components; the head's
/// latent is `concat_cols(x_bal, x_unbal)` of the last layer.
pub fn bue_encode(
    tape: &mut Tape,
    g: &EncoderGraph,
    h: Var,
    layers: &[BueLayerParams<Var>],
    opts: EncoderOptions,
) -> Result<(Var, BueOutput)> {
    let (first, rest) = layers
        .split_first()
        .ok_or_else(|| Error::InvalidConfig("BUE head needs at least one layer".into()))?;
    let mut out = bue_initial(tape, g, h, first, opts)?;
    for (l, params) in rest.iter().enumerate() {
        let next = bue_subsequent(tape, g, out.x_bal, out.x_unbal, params, l + 2, opts)?;
        out.attention.extend(next.attention);
        out.x_bal = next.x_bal;
        out.x_unbal = next.x_unbal;
    }
    let latent = tape.concat_cols(out.x_bal, out.x_unbal)?;
    Ok((latent, out))
}
