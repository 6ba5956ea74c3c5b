use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::Result;

/// Negative slope applied to raw attention coefficients before the softmax.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Normalized attention scores of one layer/branch, grouped by source node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMap {
    pub head: &'static str,
    pub layer: usize,
    /// Source node of each score row; the softmax runs per source.
    pub segment: Vec<usize>,
    pub scores: Var,
}

/// Scores `softmax_i(leaky_relu(a · [q_{q_idx[r]}, k_{k_idx[r]}]))` where the
/// softmax runs over rows sharing `segment[r]`.
pub(crate) fn scored(
    tape: &mut Tape,
    query: Var,
    q_idx: &[usize],
    key: Var,
    k_idx: &[usize],
    segment: &[usize],
    n: usize,
    attn: Var,
) -> Result<Var> {
    let q = tape.gather_rows(query, q_idx)?;
    let k = tape.gather_rows(key, k_idx)?;
    let cat = tape.concat_cols(q, k)?;
    let raw = tape.matmul(cat, attn)?;
    let e = tape.leaky_relu(raw, LEAKY_SLOPE);
    tape.segment_softmax(e, segment, n)
}

/// Attention scores for `(src[r], dst[r])` pairs over features `h`:
/// `e_ij = leaky_relu(a · [h_i W, h_j W])`, normalized per source node.
///
/// Returns the scores (`m×1`) and the projected features `h W`.
pub fn attention_scores(
    tape: &mut Tape,
    h: Var,
    src: &[usize],
    dst: &[usize],
    w: Var,
    attn: Var,
) -> Result<(Var, Var)> {
    let n = tape.shape(h)[0];
    let hw = tape.matmul(h, w)?;
    let scores = scored(tape, hw, src, hw, dst, src, n, attn)?;
    Ok((scores, hw))
}
