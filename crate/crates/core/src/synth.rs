//! Seeded generator of paired signed/unsigned graph subjects.
//!
//! Each subject has `K` communities. Node `i` carries a latent vector
//! `z_i = a_i e_{c_i} + 0.1 ξ_i`; the structural graph is the normalized
//! `sigmoid(2 z_i · z_j)` with its lower half (by the median of the upper
//! triangle) set to zero. Node time series mix unit-variance community
//! signals through `z_i`, plus private noise. The class sets the coupling
//! between community signals (`ρ = -0.6 + class_effect · y`) and the
//! strength of an extra private noise term (`2 |class_effect| · y`). The
//! functional graph is the Pearson correlation matrix of the series, and
//! node features are the series' five quantiles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::graph::{node_features_from_series, quantile_sorted, SignedGraph, Subject, UnsignedGraph};
use crate::math;
use crate::seed::derive_seed;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Version tag stored in dataset manifests.
pub const GENERATOR_VERSION: &str = "1";

/// Coupling between community signals for class 0.
pub const BASE_COUPLING: f64 = -0.6;
/// Private-noise standard deviation per unit of `|class_effect|` for class 1.
pub const PRIVATE_NOISE_SCALE: f64 = 2.0;
/// Spread of latent vectors around their community axis.
const LATENT_JITTER: f64 = 0.1;
/// Standard deviation of the noise added to scores.
const SCORE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_subjects: usize,
    pub n_communities: usize,
    pub series_length: usize,
    /// Standard deviation of the per-node private noise, in `[0, 1]`.
    pub noise_level: f64,
    /// Shift of the community coupling (and private-noise scale) for class 1.
    pub class_effect: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 16,
            n_subjects: 200,
            n_communities: 2,
            series_length: 64,
            noise_level: 0.3,
            class_effect: 0.4,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg| Err(Error::InvalidConfig(msg));
        if self.n_nodes < 4 {
            return bad(format!("n_nodes must be at least 4, got {}", self.n_nodes));
        }
        if self.series_length < 8 {
            return bad(format!("series_length must be at least 8, got {}", self.series_length));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return bad(format!("noise_level must lie in [0, 1], got {}", self.noise_level));
        }
        if self.n_communities == 0 || self.n_communities > self.n_nodes {
            return bad(format!(
                "n_communities must lie in 1..={}, got {}",
                self.n_nodes, self.n_communities
            ));
        }
        if !self.class_effect.is_finite() {
            return bad(format!("class_effect must be finite, got {}", self.class_effect));
        }
        Ok(())
    }

    /// Coupling between distinct community signals for class `label`,
    /// clamped so the signal covariance stays positive definite.
    pub fn coupling(&self, label: usize) -> f64 {
        let k = self.n_communities;
        if k < 2 {
            return 0.0;
        }
        let lo = -1.0 / (k - 1) as f64 + 0.05;
        (BASE_COUPLING + self.class_effect * label as f64).clamp(lo, 0.95)
    }
}

/// Everything needed to regenerate a dataset exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: SynthConfig,
    pub seed: u64,
    pub version: &'static str,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Pearson correlation of every pair of rows, hollow and clamped to
/// `[-1, 1]`. Constant rows correlate 0 with everything.
pub fn correlation_matrix(series: &Tensor) -> Tensor {
    let (n, len) = (series.rows(), series.cols());
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = series.row(i);
            let mean = row.iter().sum::<f64>() / len as f64;
            row.iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|r| math::sqrt(r.iter().map(|x| x * x).sum()))
        .collect();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let denom = norms[i] * norms[j];
            let r = if denom > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            out.set(i, j, r);
            out.set(j, i, r);
        }
    }
    out
}

/// Zeroes every off-diagonal entry strictly below the median of the upper
/// triangle; the matrix must be symmetric and hollow.
pub fn sparsify_below_median(adj: &Tensor) -> Tensor {
    let n = adj.rows();
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| adj.get(i, j))
        .collect();
    upper.sort_by(f64::total_cmp);
    let median = quantile_sorted(&upper, 0.5);
    adj.map(|x| if x < median { 0.0 } else { x })
}

/// Seed of subject `subject_seed` under the dataset seed.
pub fn subject_stream(config: &SynthConfig, subject_seed: u64) -> u64 {
    derive_seed(config.seed, subject_seed)
}

/// Generates one subject. Its label is `subject_seed % 2`; all randomness
/// comes from a stream derived from `(config.seed, subject_seed)`.
pub fn generate_subject(config: &SynthConfig, subject_seed: u64) -> Result<Subject> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(subject_stream(config, subject_seed));
    let (n, k, len) = (config.n_nodes, config.n_communities, config.series_length);
    let label = (subject_seed % 2) as usize;

    // Community assignment and latent node vectors.
    let mut community: Vec<usize> = (0..n).map(|i| i % k).collect();
    community.shuffle(&mut rng);
    let mut z = Tensor::zeros(n, k);
    for i in 0..n {
        let strength = rng.random_range(0.5..1.5);
        for c in 0..k {
            let jitter = LATENT_JITTER * normal(&mut rng);
            z.set(i, c, jitter + if c == community[i] { strength } else { 0.0 });
        }
    }

    // Structural graph: normalized sigmoid of latent inner products, lower
    // half zeroed.
    let mut raw = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            let s = math::sigmoid(2.0 * dot);
            raw.set(i, j, s);
            raw.set(j, i, s);
        }
    }
    let peak = raw.max_abs();
    let structural = sparsify_below_median(&raw.map(|x| x / peak));

    // Community signals with equal pairwise coupling rho:
    // s_c = a e_c + b mean(e), a^2 = 1 - rho, (2ab + b^2) = K rho.
    let rho = config.coupling(label);
    let a = math::sqrt(1.0 - rho);
    let b = -a + math::sqrt(1.0 + (k as f64 - 1.0) * rho);
    let offsets: Vec<f64> = (0..k)
        .map(|c| if k == 1 { 0.0 } else { -1.0 + 2.0 * c as f64 / (k - 1) as f64 })
        .collect();
    let private = PRIVATE_NOISE_SCALE * config.class_effect.abs() * label as f64;
    let mut series = Tensor::zeros(n, len);
    let mut e = vec![0.0; k];
    for t in 0..len {
        for x in e.iter_mut() {
            *x = normal(&mut rng);
        }
        let mean = e.iter().sum::<f64>() / k as f64;
        let signal: Vec<f64> = (0..k).map(|c| a * e[c] + b * mean + offsets[c]).collect();
        for i in 0..n {
            let shared: f64 = (0..k).map(|c| z.get(i, c) * signal[c]).sum();
            let noise = private * normal(&mut rng) + config.noise_level * normal(&mut rng);
            series.set(i, t, shared + noise);
        }
    }

    let functional = correlation_matrix(&series);
    let features = node_features_from_series(&series)?;

    // Score: within-community coherence of the functional graph plus noise.
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            if community[i] == community[j] {
                sum += functional.get(i, j);
                count += 1;
            }
        }
    }
    let coherence = if count > 0 { sum / count as f64 } else { 0.0 };
    let score = 2.0 * coherence + SCORE_NOISE * normal(&mut rng);

    Subject::new(
        SignedGraph::new(functional, Some(features))?,
        UnsignedGraph::new(structural)?,
        Some(label),
        Some(score),
    )
}

/// Subjects `0..n_subjects` (alternating labels) and the manifest that
/// regenerates them.
pub fn generate_dataset(config: &SynthConfig) -> Result<(Vec<Subject>, Manifest)> {
    config.validate()?;
    if config.n_subjects < 10 {
        return Err(Error::InvalidConfig(format!(
            "n_subjects must be at least 10, got {}",
            config.n_subjects
        )));
    }
    let subjects = (0..config.n_subjects as u64)
        .map(|s| generate_subject(config, s))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        config: config.clone(),
        seed: config.seed,
        version: GENERATOR_VERSION,
    };
    Ok((subjects, manifest))
}
