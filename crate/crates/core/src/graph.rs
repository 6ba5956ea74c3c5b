//! Signed and unsigned weighted graphs, their preprocessing, and the
//! neighbor/balance machinery the encoder is built on.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// Entries further apart than this make a matrix asymmetric.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Longest walk the brute-force balance oracle will enumerate.
pub const MAX_ORACLE_HOPS: usize = 6;

/// Square adjacency with real-valued signed weights plus node features.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    adj: Tensor,
    features: Option<Tensor>,
}

/// Square adjacency with non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsignedGraph {
    adj: Tensor,
}

/// One paired sample: signed input graph, unsigned target graph, and the
/// supervised targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub functional: SignedGraph,
    pub structural: UnsignedGraph,
    pub label: Option<usize>,
    pub score: Option<f64>,
}

/// Per-node positive (`pos`) and negative (`neg`) neighbor indices, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSets {
    pub pos: Vec<Vec<usize>>,
    pub neg: Vec<Vec<usize>>,
}

/// Nodes reachable from a start node by a walk with an even (`balanced`)
/// or odd (`unbalanced`) number of negative edges. A node can be in both.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BalanceSets {
    pub balanced: BTreeSet<usize>,
    pub unbalanced: BTreeSet<usize>,
}

fn validate_square(adj: &Tensor) -> Result<()> {
    if adj.rows() != adj.cols() {
        return Err(Error::InvalidGraph(format!(
            "adjacency must be square, got {}x{}",
            adj.rows(),
            adj.cols()
        )));
    }
    if adj.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGraph("adjacency has non-finite entries".into()));
    }
    for i in 0..adj.rows() {
        if adj.get(i, i) != 0.0 {
            return Err(Error::InvalidGraph(format!(
                "diagonal entry {i} is {}, expected 0",
                adj.get(i, i)
            )));
        }
    }
    Ok(())
}

/// Averages `adj` with its transpose when the two differ by more than
/// [`SYMMETRY_TOL`].
fn symmetrize(mut adj: Tensor) -> Tensor {
    let n = adj.rows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((adj.get(i, j) - adj.get(j, i)).abs());
        }
    }
    if worst > SYMMETRY_TOL {
        log::warn!("asymmetric adjacency (max |a_ij - a_ji| = {worst:e}); averaging with transpose");
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (adj.get(i, j) + adj.get(j, i));
                adj.set(i, j, m);
                adj.set(j, i, m);
            }
        }
    }
    adj
}

impl SignedGraph {
    /// Validates a square hollow adjacency; asymmetric input is symmetrized.
    pub fn new(adj: Tensor, features: Option<Tensor>) -> Result<Self> {
        validate_square(&adj)?;
        if let Some(f) = &features {
            if f.rows() != adj.rows() {
                return Err(Error::InvalidGraph(format!(
                    "feature matrix has {} rows for {} nodes",
                    f.rows(),
                    adj.rows()
                )));
            }
        }
        Ok(Self {
            adj: symmetrize(adj),
            features,
        })
    }

    pub fn n(&self) -> usize {
        self.adj.rows()
    }

    pub fn adj(&self) -> &Tensor {
        &self.adj
    }

    pub fn features(&self) -> Option<&Tensor> {
        self.features.as_ref()
    }

    pub fn with_features(mut self, features: Tensor) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                self.n()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }
}

impl UnsignedGraph {
    pub fn new(adj: Tensor) -> Result<Self> {
        validate_square(&adj)?;
        if adj.data().iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidGraph("unsigned graph has a negative weight".into()));
        }
        Ok(Self { adj: symmetrize(adj) })
    }

    pub fn n(&self) -> usize {
        self.adj.rows()
    }

    pub fn adj(&self) -> &Tensor {
        &self.adj
    }

    /// Fraction of off-diagonal entries that are nonzero.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let nonzero = self.adj.data().iter().filter(|&&x| x != 0.0).count();
        nonzero as f64 / (n * (n - 1)) as f64
    }
}

impl Subject {
    pub fn new(
        functional: SignedGraph,
        structural: UnsignedGraph,
        label: Option<usize>,
        score: Option<f64>,
    ) -> Result<Self> {
        if functional.n() != structural.n() {
            return Err(Error::InvalidGraph(format!(
                "functional graph has {} nodes, structural has {}",
                functional.n(),
                structural.n()
            )));
        }
        Ok(Self {
            functional,
            structural,
            label,
            score,
        })
    }

    pub fn n(&self) -> usize {
        self.functional.n()
    }
}

/// Divides every entry by the largest absolute entry; signs and zeros are
/// preserved and the result lies in `[-1, 1]`.
pub fn normalize_functional(g: &SignedGraph) -> Result<SignedGraph> {
    let scale = g.adj.max_abs();
    if scale == 0.0 {
        return Err(Error::DegenerateGraph);
    }
    Ok(SignedGraph {
        adj: g.adj.map(|x| x / scale),
        features: g.features.clone(),
    })
}

/// Divides every entry by the largest entry; the result lies in `[0, 1]`.
pub fn normalize_structural(g: &UnsignedGraph) -> Result<UnsignedGraph> {
    let scale = g.adj.max_abs();
    if scale == 0.0 {
        return Err(Error::DegenerateGraph);
    }
    Ok(UnsignedGraph {
        adj: g.adj.map(|x| x / scale),
    })
}

/// Splits into the positive subgraph and the magnitudes of the negative
/// subgraph, so that `positive - negative == g` entrywise.
pub fn split_signed(g: &SignedGraph) -> (UnsignedGraph, UnsignedGraph) {
    let pos = g.adj.map(|x| if x > 0.0 { x } else { 0.0 });
    let neg = g.adj.map(|x| if x < 0.0 { -x } else { 0.0 });
    (UnsignedGraph { adj: pos }, UnsignedGraph { adj: neg })
}

pub fn neighbor_sets(g: &SignedGraph) -> NeighborSets {
    let n = g.n();
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for i in 0..n {
        let row = g.adj.row(i);
        pos.push((0..n).filter(|&j| row[j] > 0.0).collect());
        neg.push((0..n).filter(|&j| row[j] < 0.0).collect());
    }
    NeighborSets { pos, neg }
}

/// Enumerates every walk of length `1..=hops` that starts at `start` and
/// records the parity of negative edges on arrival at each node.
///
/// Brute force by design; `hops` above [`MAX_ORACLE_HOPS`] is rejected.
pub fn balance_oracle(g: &SignedGraph, start: usize, hops: usize) -> Result<BalanceSets> {
    if hops == 0 || hops > MAX_ORACLE_HOPS {
        return Err(Error::InvalidConfig(format!(
            "balance oracle needs 1 <= hops <= {MAX_ORACLE_HOPS}, got {hops}"
        )));
    }
    if start >= g.n() {
        return Err(Error::InvalidConfig(format!("node {start} out of range")));
    }
    let n = g.n();
    let mut sets = BalanceSets::default();
    // (node, odd parity so far, depth)
    let mut stack = alloc::vec![(start, false, 0usize)];
    while let Some((node, odd, depth)) = stack.pop() {
        if depth == hops {
            continue;
        }
        for next in 0..n {
            let w = g.adj.get(node, next);
            if w == 0.0 {
                continue;
            }
            let parity = odd ^ (w < 0.0);
            if parity {
                sets.unbalanced.insert(next);
            } else {
                sets.balanced.insert(next);
            }
            stack.push((next, parity, depth + 1));
        }
    }
    Ok(sets)
}

/// Linear-interpolation quantile of an ascending slice (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-row `[min, Q25, median, Q75, max]` of an `n×L` series matrix.
pub fn node_features_from_series(series: &Tensor) -> Result<Tensor> {
    if series.cols() < 2 {
        return Err(Error::InvalidConfig(format!(
            "series need at least 2 samples, got {}",
            series.cols()
        )));
    }
    let mut out = Tensor::zeros(series.rows(), 5);
    let mut buf: Vec<f64> = Vec::with_capacity(series.cols());
    for r in 0..series.rows() {
        buf.clear();
        buf.extend_from_slice(series.row(r));
        buf.sort_by(f64::total_cmp);
        for (c, q) in [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().enumerate() {
            out.set(r, c, quantile_sorted(&buf, q));
        }
    }
    Ok(out)
}
