use alloc::vec::Vec;

use super::{MlpParams, Task};
use crate::math;
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaliencyEntry {
    pub node: usize,
    pub score: f64,
    /// 1-based position in the ranking.
    pub rank: usize,
}

/// Per-node inputs to the last MLP layer.
///
/// Each latent row is pushed through the earlier dense layers without bias.
/// The activation is not applied per node; instead each hidden unit scales
/// every node's share by the gain `elu(z) / z` the activation has at the
/// pooled pre-activation `z` of the readout. Node shares therefore add up
/// to the pooled activation minus the (equally gain-scaled) bias terms, and
/// a single-layer head reduces to the plain latents.
pub fn per_node_inputs(latents: &Tensor, mlp: &MlpParams) -> Result<Tensor> {
    let mut pooled = Tensor::from_fn(1, latents.cols(), |_, c| (0..latents.rows()).map(|r| latents.get(r, c)).sum());
    let mut h = latents.clone();
    for layer in &mlp.layers[..mlp.layers.len().saturating_sub(1)] {
        let z = pooled.matmul(&layer.w)?;
        let gain: Vec<f64> = (0..z.cols())
            .map(|k| {
                let v = z.get(0, k) + layer.b.get(0, k);
                if v >= 0.0 {
                    1.0
                } else {
                    math::expm1(v) / v
                }
            })
            .collect();
        h = h.matmul(&layer.w)?;
        for r in 0..h.rows() {
            for (x, g) in h.row_mut(r).iter_mut().zip(&gain) {
                *x *= g;
            }
        }
        pooled = Tensor::from_fn(1, z.cols(), |_, k| {
            let v = z.get(0, k) + layer.b.get(0, k);
            if v > 0.0 {
                v
            } else {
                math::expm1(v)
            }
        });
    }
    Ok(h)
}

/// Unclipped class-activation contribution `w_c · h_i` of every node.
pub fn node_contributions(latents: &Tensor, mlp: &MlpParams, class: usize) -> Result<Vec<f64>> {
    let last = mlp.layers.last().ok_or(Error::EmptyInput("mlp layers"))?;
    if class >= last.w.cols() {
        return Err(Error::InvalidConfig(alloc::format!(
            "class {class} out of range for {} outputs",
            last.w.cols()
        )));
    }
    let h = per_node_inputs(latents, mlp)?;
    if h.cols() != last.w.rows() {
        return Err(Error::ShapeMismatch {
            op: "saliency",
            lhs: h.shape(),
            rhs: last.w.shape(),
        });
    }
    Ok((0..h.rows())
        .map(|i| h.row(i).iter().enumerate().map(|(k, x)| x * last.w.get(k, class)).sum())
        .collect())
}

/// Class activation map: `s_i = max(0, w_c · h_i)`, the `top_k` highest
/// scores in descending order, ties broken by ascending node index.
pub fn saliency_map(
    latents: &Tensor,
    mlp: &MlpParams,
    task: Task,
    class: usize,
    top_k: usize,
) -> Result<Vec<SaliencyEntry>> {
    if task != Task::Classification {
        return Err(Error::NotClassification);
    }
    let scores = node_contributions(latents, mlp, class)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let clipped: Vec<f64> = scores.iter().map(|&s| s.max(0.0)).collect();
    order.sort_by(|&a, &b| clipped[b].total_cmp(&clipped[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(r, node)| SaliencyEntry {
            node,
            score: clipped[node],
            rank: r + 1,
        })
        .collect())
}
