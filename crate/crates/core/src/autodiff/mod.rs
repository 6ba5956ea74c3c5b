//! Define-by-run reverse-mode differentiation over dense 2-D tensors.
//!
//! A [`Tape`] records every primitive applied during a forward pass. Each
//! recorded value is addressed by a [`Var`] handle. [`Tape::backward`] walks
//! the record once in reverse, computing adjoints for every node reachable
//! from the scalar root, and adds them into per-node gradient slots. The
//! slots persist until [`Tape::reset_grads`], so two backward passes without
//! a reset accumulate.
//!
//! Indices handed to `gather`, `segment_sum` and `segment_softmax` are
//! copied into the record; segments may be empty and need not be contiguous.

mod gradcheck;

pub use gradcheck::{gradient_check, GradCheckReport, ParamCheck};

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ScaleRows(Var, Var),
    ConcatCols(Var, Var),
    ConcatRows(Var, Var),
    Gather(Var, Vec<usize>),
    SegmentSum(Var, Vec<usize>),
    SegmentSoftmax(Var, Vec<usize>),
    LeakyRelu(Var, f64),
    Elu(Var),
    Sigmoid(Var),
    Tanh(Var),
    LogSoftmax(Var),
    SumAll(Var),
    Mean(Var),
    Square(Var),
    Abs(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Ordered record of a forward computation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A differentiable input (parameter or probed feature).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_raw(value, true, Op::Leaf)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_raw(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    /// Accumulated gradient of `v` (zeros if nothing has reached it).
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        match &node.grad {
            Some(g) => Tensor::from_vec(node.value.rows(), node.value.cols(), g.clone())
                .expect("gradient buffer mirrors value shape"),
            None => Tensor::zeros(node.value.rows(), node.value.cols()),
        }
    }

    pub fn reset_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push_raw(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, inputs: &[Var], op: Op) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push_raw(value, requires_grad, op)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::ShapeMismatch {
                op,
                lhs: sa,
                rhs: sb,
            });
        }
        Ok(())
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = self.value(a).map(f);
        self.push(value, &[a], op)
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::from_vec(va.rows(), va.cols(), data).expect("checked shapes");
        self.push(value, &[a, b], op)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, &[a, b], Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(value, &[a], Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.binary(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.binary(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.binary(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        self.unary(a, Op::Scale(a, factor), |x| x * factor)
    }

    /// Multiplies row `r` of the `m×d` tensor `x` by `s[r]` (`s` is `m×1`).
    pub fn scale_rows(&mut self, x: Var, s: Var) -> Result<Var> {
        let (sx, ss) = (self.shape(x), self.shape(s));
        if ss != [sx[0], 1] {
            return Err(Error::ShapeMismatch {
                op: "scale_rows",
                lhs: sx,
                rhs: ss,
            });
        }
        let (vx, vs) = (self.value(x), self.value(s));
        let value = Tensor::from_fn(sx[0], sx[1], |r, c| vx.get(r, c) * vs.get(r, 0));
        Ok(self.push(value, &[x, s], Op::ScaleRows(x, s)))
    }

    /// Concatenation along the last (column) dimension.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa[0] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                lhs: sa,
                rhs: sb,
            });
        }
        let (va, vb) = (self.value(a), self.value(b));
        let value = Tensor::from_fn(sa[0], sa[1] + sb[1], |r, c| {
            if c < sa[1] {
                va.get(r, c)
            } else {
                vb.get(r, c - sa[1])
            }
        });
        Ok(self.push(value, &[a, b], Op::ConcatCols(a, b)))
    }

    /// Stacks `b` below `a`.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa[1] != sb[1] {
            return Err(Error::ShapeMismatch {
                op: "concat_rows",
                lhs: sa,
                rhs: sb,
            });
        }
        let mut data = Vec::with_capacity((sa[0] + sb[0]) * sa[1]);
        data.extend_from_slice(self.value(a).data());
        data.extend_from_slice(self.value(b).data());
        let value = Tensor::from_vec(sa[0] + sb[0], sa[1], data).expect("stacked shape");
        Ok(self.push(value, &[a, b], Op::ConcatRows(a, b)))
    }

    /// Row `r` of the output is row `index[r]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let sx = self.shape(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= sx[0]) {
            return Err(Error::ShapeMismatch {
                op: "gather_rows",
                lhs: sx,
                rhs: [bad, 1],
            });
        }
        let vx = self.value(x);
        let mut data = Vec::with_capacity(index.len() * sx[1]);
        for &i in index {
            data.extend_from_slice(vx.row(i));
        }
        let value = Tensor::from_vec(index.len(), sx[1], data).expect("gathered shape");
        Ok(self.push(value, &[x], Op::Gather(x, index.to_vec())))
    }

    /// Sums the rows of `x` (`m×d`) into `segments` output rows; row `r`
    /// goes to `segment[r]`. Segments with no members are zero rows.
    pub fn segment_sum(&mut self, x: Var, segment: &[usize], segments: usize) -> Result<Var> {
        let sx = self.shape(x);
        check_segments("segment_sum", sx, segment, segments)?;
        let vx = self.value(x);
        let mut value = Tensor::zeros(segments, sx[1]);
        for (r, &s) in segment.iter().enumerate() {
            let src = vx.row(r);
            for (o, &v) in value.row_mut(s).iter_mut().zip(src) {
                *o += v;
            }
        }
        Ok(self.push(value, &[x], Op::SegmentSum(x, segment.to_vec())))
    }

    /// Softmax of the `m×1` column `x` within each segment, using
    /// max-subtraction for stability.
    pub fn segment_softmax(&mut self, x: Var, segment: &[usize], segments: usize) -> Result<Var> {
        let sx = self.shape(x);
        if sx[1] != 1 {
            return Err(Error::ShapeMismatch {
                op: "segment_softmax",
                lhs: sx,
                rhs: [sx[0], 1],
            });
        }
        check_segments("segment_softmax", sx, segment, segments)?;
        let vx = self.value(x).data();
        let mut max = vec![f64::NEG_INFINITY; segments];
        for (r, &s) in segment.iter().enumerate() {
            max[s] = max[s].max(vx[r]);
        }
        let mut out: Vec<f64> = segment
            .iter()
            .enumerate()
            .map(|(r, &s)| math::exp(vx[r] - max[s]))
            .collect();
        let mut total = vec![0.0; segments];
        for (r, &s) in segment.iter().enumerate() {
            total[s] += out[r];
        }
        for (r, &s) in segment.iter().enumerate() {
            out[r] /= total[s];
        }
        let value = Tensor::from_vec(sx[0], 1, out).expect("column shape");
        Ok(self.push(value, &[x], Op::SegmentSoftmax(x, segment.to_vec())))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.unary(a, Op::LeakyRelu(a, slope), |x| if x >= 0.0 { x } else { slope * x })
    }

    pub fn elu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Elu(a), |x| if x > 0.0 { x } else { math::expm1(x) })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), math::sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), math::tanh)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let mut value = va.clone();
        for r in 0..va.rows() {
            let row = value.row_mut(r);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let lse = max + math::ln(row.iter().map(|&x| math::exp(x - max)).sum::<f64>());
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        self.push(value, &[a], Op::LogSoftmax(a))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), &[a], Op::SumAll(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let va = self.value(a);
        if va.is_empty() {
            return Err(Error::EmptyInput("mean"));
        }
        let m = va.data().iter().sum::<f64>() / va.len() as f64;
        Ok(self.push(Tensor::scalar(m), &[a], Op::Mean(a)))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, Op::Abs(a), f64::abs)
    }

    /// Reverse pass from the scalar `root`. Adjoints of every node reachable
    /// from `root` are added into the persistent gradient slots.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let shape = self.shape(root);
        if shape != [1, 1] {
            return Err(Error::NonScalarRoot(shape));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(vec![1.0]);
        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            self.propagate(idx, &g, &mut adj);
            let node = &mut self.nodes[idx];
            match &mut node.grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => node.grad = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                if self.needs(*a) {
                    // dA = G · Bᵀ
                    let ga = slot(adj, *a, m * k);
                    for r in 0..m {
                        for c in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[r * n + j] * vb.get(c, j);
                            }
                            ga[r * k + c] += s;
                        }
                    }
                }
                if self.needs(*b) {
                    // dB = Aᵀ · G
                    let gb = slot(adj, *b, k * n);
                    for r in 0..m {
                        for c in 0..k {
                            let x = va.get(r, c);
                            if x == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                gb[c * n + j] += x * g[r * n + j];
                            }
                        }
                    }
                }
            }
            Op::Transpose(a) => {
                if self.needs(*a) {
                    let (r, c) = (y.rows(), y.cols());
                    let ga = slot(adj, *a, r * c);
                    for i in 0..r {
                        for j in 0..c {
                            ga[j * r + i] += g[i * c + j];
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                self.accumulate(adj, *a, g.iter().copied());
                self.accumulate(adj, *b, g.iter().copied());
            }
            Op::Sub(a, b) => {
                self.accumulate(adj, *a, g.iter().copied());
                self.accumulate(adj, *b, g.iter().map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(adj, *a, g.iter().zip(vb).map(|(g, b)| g * b));
                self.accumulate(adj, *b, g.iter().zip(va).map(|(g, a)| g * a));
            }
            Op::Scale(a, f) => {
                self.accumulate(adj, *a, g.iter().map(|x| x * f));
            }
            Op::ScaleRows(x, s) => {
                let (vx, vs) = (self.value(*x), self.value(*s));
                let d = vx.cols();
                self.accumulate(
                    adj,
                    *x,
                    g.iter().enumerate().map(|(i, gi)| gi * vs.get(i / d, 0)),
                );
                if self.needs(*s) {
                    let gs = slot(adj, *s, vx.rows());
                    for r in 0..vx.rows() {
                        gs[r] += vx.row(r).iter().zip(&g[r * d..(r + 1) * d]).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(*a).cols();
                let cols = y.cols();
                self.accumulate(
                    adj,
                    *a,
                    (0..y.rows()).flat_map(|r| g[r * cols..r * cols + ca].iter().copied()),
                );
                self.accumulate(
                    adj,
                    *b,
                    (0..y.rows()).flat_map(|r| g[r * cols + ca..(r + 1) * cols].iter().copied()),
                );
            }
            Op::ConcatRows(a, b) => {
                let split = self.value(*a).len();
                self.accumulate(adj, *a, g[..split].iter().copied());
                self.accumulate(adj, *b, g[split..].iter().copied());
            }
            Op::Gather(x, index) => {
                if self.needs(*x) {
                    let vx = self.value(*x);
                    let d = vx.cols();
                    let gx = slot(adj, *x, vx.len());
                    for (r, &i) in index.iter().enumerate() {
                        for c in 0..d {
                            gx[i * d + c] += g[r * d + c];
                        }
                    }
                }
            }
            Op::SegmentSum(x, segment) => {
                let d = y.cols();
                self.accumulate(
                    adj,
                    *x,
                    segment.iter().flat_map(|&s| g[s * d..(s + 1) * d].iter().copied()),
                );
            }
            Op::SegmentSoftmax(x, segment) => {
                if self.needs(*x) {
                    let yv = y.data();
                    let segments = segment.iter().max().map_or(0, |m| m + 1);
                    let mut dot = vec![0.0; segments];
                    for (r, &s) in segment.iter().enumerate() {
                        dot[s] += yv[r] * g[r];
                    }
                    self.accumulate(
                        adj,
                        *x,
                        segment.iter().enumerate().map(|(r, &s)| yv[r] * (g[r] - dot[s])),
                    );
                }
            }
            Op::LeakyRelu(a, slope) => {
                let va = self.value(*a).data();
                self.accumulate(
                    adj,
                    *a,
                    g.iter().zip(va).map(|(g, &x)| if x >= 0.0 { *g } else { g * slope }),
                );
            }
            Op::Elu(a) => {
                let va = self.value(*a).data();
                self.accumulate(
                    adj,
                    *a,
                    g.iter()
                        .zip(va)
                        .zip(y.data())
                        .map(|((g, &x), &y)| if x > 0.0 { *g } else { g * (y + 1.0) }),
                );
            }
            Op::Sigmoid(a) => {
                self.accumulate(adj, *a, g.iter().zip(y.data()).map(|(g, y)| g * y * (1.0 - y)));
            }
            Op::Tanh(a) => {
                self.accumulate(adj, *a, g.iter().zip(y.data()).map(|(g, y)| g * (1.0 - y * y)));
            }
            Op::LogSoftmax(a) => {
                if self.needs(*a) {
                    let cols = y.cols();
                    let mut out = Vec::with_capacity(y.len());
                    for r in 0..y.rows() {
                        let gr = &g[r * cols..(r + 1) * cols];
                        let total: f64 = gr.iter().sum();
                        for (gi, yi) in gr.iter().zip(y.row(r)) {
                            out.push(gi - math::exp(*yi) * total);
                        }
                    }
                    self.accumulate(adj, *a, out.into_iter());
                }
            }
            Op::SumAll(a) => {
                let n = self.value(*a).len();
                self.accumulate(adj, *a, core::iter::repeat_n(g[0], n));
            }
            Op::Mean(a) => {
                let n = self.value(*a).len();
                self.accumulate(adj, *a, core::iter::repeat_n(g[0] / n as f64, n));
            }
            Op::Square(a) => {
                let va = self.value(*a).data();
                self.accumulate(adj, *a, g.iter().zip(va).map(|(g, x)| 2.0 * g * x));
            }
            Op::Abs(a) => {
                let va = self.value(*a).data();
                self.accumulate(
                    adj,
                    *a,
                    g.iter().zip(va).map(|(g, &x)| {
                        if x > 0.0 {
                            *g
                        } else if x < 0.0 {
                            -g
                        } else {
                            0.0
                        }
                    }),
                );
            }
        }
    }

    #[inline]
    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn accumulate(&self, adj: &mut [Option<Vec<f64>>], v: Var, contrib: impl Iterator<Item = f64>) {
        if !self.needs(v) {
            return;
        }
        let len = self.nodes[v.0].value.len();
        let target = slot(adj, v, len);
        for (t, c) in target.iter_mut().zip(contrib) {
            *t += c;
        }
    }
}

fn slot(adj: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    adj[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn check_segments(op: &'static str, shape: [usize; 2], segment: &[usize], segments: usize) -> Result<()> {
    if segment.len() != shape[0] {
        return Err(Error::ShapeMismatch {
            op,
            lhs: shape,
            rhs: [segment.len(), 1],
        });
    }
    if let Some(&bad) = segment.iter().find(|&&s| s >= segments) {
        return Err(Error::ShapeMismatch {
            op,
            lhs: [segments, 1],
            rhs: [bad, 1],
        });
    }
    Ok(())
}
