//! Per-node loop re-implementations of the encoder layers, written directly
//! from the layer formulas with plain `Vec<f64>` arithmetic. Shared by the
//! core integration tests and the acceptance suite.

#![allow(dead_code)]

use dsbn_core::encoder::{BueLayerParams, GatLayerParams, QuerySource};
use dsbn_core::Tensor;

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(t: &Tensor) -> Mat {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// `x · W` for a row vector `x`.
pub fn row_times(x: &[f64], w: &Tensor) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for (k, xk) in x.iter().enumerate() {
        for c in 0..w.cols() {
            out[c] += xk * w.get(k, c);
        }
    }
    out
}

fn lrelu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.2 * x
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// `leaky_relu(a · [q, k])`.
fn coefficient(attn: &Tensor, q: &[f64], k: &[f64]) -> f64 {
    let d = q.len();
    let mut s = 0.0;
    for c in 0..d {
        s += attn.get(c, 0) * q[c] + attn.get(d + c, 0) * k[c];
    }
    lrelu(s)
}

/// One attention term: raw coefficient and the value vector it weights.
struct Term {
    e: f64,
    value: Vec<f64>,
}

/// `elu(Σ softmax(e)·value)`; zero row when there are no terms.
fn combine(terms: &[Term], width: usize) -> (Vec<f64>, Vec<f64>) {
    if terms.is_empty() {
        return (vec![0.0; width], Vec::new());
    }
    let denom: f64 = terms.iter().map(|t| t.e.exp()).sum();
    let alphas: Vec<f64> = terms.iter().map(|t| t.e.exp() / denom).collect();
    let mut out = vec![0.0; width];
    for (t, a) in terms.iter().zip(&alphas) {
        for c in 0..width {
            out[c] += a * t.value[c];
        }
    }
    (out.into_iter().map(elu).collect(), alphas)
}

pub fn positive_neighbors(adj: &Tensor, i: usize) -> Vec<usize> {
    (0..adj.cols()).filter(|&j| adj.get(i, j) > 0.0).collect()
}

pub fn negative_neighbors(adj: &Tensor, i: usize) -> Vec<usize> {
    (0..adj.cols()).filter(|&j| adj.get(i, j) < 0.0).collect()
}

/// First layer: balanced over positive neighbors, unbalanced over negative.
pub fn bue_first(adj: &Tensor, x: &Mat, p: &BueLayerParams) -> (Mat, Mat) {
    let n = x.len();
    let width = p.w_bal.cols();
    let mut bal = Vec::with_capacity(n);
    let mut unbal = Vec::with_capacity(n);
    for i in 0..n {
        let qi_b = row_times(&x[i], &p.w_bal);
        let terms: Vec<Term> = positive_neighbors(adj, i)
            .into_iter()
            .map(|j| {
                let v = row_times(&x[j], &p.w_bal);
                Term {
                    e: coefficient(&p.attn_bal, &qi_b, &v),
                    value: v,
                }
            })
            .collect();
        bal.push(combine(&terms, width).0);

        let qi_u = row_times(&x[i], &p.w_unbal);
        let terms: Vec<Term> = negative_neighbors(adj, i)
            .into_iter()
            .map(|k| {
                let v = row_times(&x[k], &p.w_unbal);
                Term {
                    e: coefficient(&p.attn_unbal, &qi_u, &v),
                    value: v,
                }
            })
            .collect();
        unbal.push(combine(&terms, width).0);
    }
    (bal, unbal)
}

/// One later layer. For the balanced branch: positive neighbors contribute
/// their balanced features, negative neighbors their unbalanced features;
/// all coefficients share one softmax over the whole neighborhood. The
/// unbalanced branch mirrors this.
pub fn bue_next(
    adj: &Tensor,
    bal: &Mat,
    unbal: &Mat,
    p: &BueLayerParams,
    query: QuerySource,
) -> (Mat, Mat) {
    let n = bal.len();
    let width = p.w_bal.cols();
    let branch = |own: &Mat, other: &Mat, w: &Tensor, attn: &Tensor, i: usize| {
        let q_own = row_times(&own[i], w);
        let q_cross = match query {
            QuerySource::Own => q_own.clone(),
            QuerySource::Mirrored => row_times(&other[i], w),
        };
        let mut terms = Vec::new();
        for j in positive_neighbors(adj, i) {
            let v = row_times(&own[j], w);
            terms.push(Term {
                e: coefficient(attn, &q_own, &v),
                value: v,
            });
        }
        for k in negative_neighbors(adj, i) {
            let v = row_times(&other[k], w);
            terms.push(Term {
                e: coefficient(attn, &q_cross, &v),
                value: v,
            });
        }
        combine(&terms, width).0
    };
    let new_bal = (0..n)
        .map(|i| branch(bal, unbal, &p.w_bal, &p.attn_bal, i))
        .collect();
    let new_unbal = (0..n)
        .map(|i| branch(unbal, bal, &p.w_unbal, &p.attn_unbal, i))
        .collect();
    (new_bal, new_unbal)
}

pub fn bue_stack(adj: &Tensor, x: &Mat, layers: &[BueLayerParams], query: QuerySource) -> (Mat, Mat) {
    let (mut bal, mut unbal) = bue_first(adj, x, &layers[0]);
    for p in &layers[1..] {
        let next = bue_next(adj, &bal, &unbal, p, query);
        bal = next.0;
        unbal = next.1;
    }
    (bal, unbal)
}

/// Graph attention over the nonzero entries of an unsigned adjacency.
pub fn gat(adj: &Tensor, x: &Mat, p: &GatLayerParams) -> Mat {
    let width = p.w.cols();
    (0..x.len())
        .map(|i| {
            let qi = row_times(&x[i], &p.w);
            let terms: Vec<Term> = (0..adj.cols())
                .filter(|&j| adj.get(i, j) != 0.0)
                .map(|j| {
                    let v = row_times(&x[j], &p.w);
                    Term {
                        e: coefficient(&p.attn, &qi, &v),
                        value: v,
                    }
                })
                .collect();
            combine(&terms, width).0
        })
        .collect()
}

/// Attention scores (per source node) of a graph-attention layer.
pub fn gat_scores(adj: &Tensor, x: &Mat, p: &GatLayerParams) -> Vec<Vec<f64>> {
    let width = p.w.cols();
    (0..x.len())
        .map(|i| {
            let qi = row_times(&x[i], &p.w);
            let terms: Vec<Term> = (0..adj.cols())
                .filter(|&j| adj.get(i, j) != 0.0)
                .map(|j| {
                    let v = row_times(&x[j], &p.w);
                    Term {
                        e: coefficient(&p.attn, &qi, &v),
                        value: v,
                    }
                })
                .collect();
            combine(&terms, width).1
        })
        .collect()
}

pub fn concat(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().chain(y).copied().collect())
        .collect()
}

pub fn max_abs_diff(a: &Mat, t: &Tensor) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, row) in a.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((v - t.get(r, c)).abs());
        }
    }
    worst
}
