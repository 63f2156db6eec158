//! Gaussian-mixture benchmark data.
//!
//! `K` equally weighted isotropic components in `R^N`. Means are placed
//! deterministically from the component index (see [`build_means`]);
//! samples draw a component uniformly and add `sqrt(cov_scale)` times a
//! standard normal.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::math::{log, log_sum_exp, sqrt};
use crate::rng::Prng;

pub const DEFAULT_SPREAD: f64 = 25.0;
pub const DEFAULT_COV_SCALE: f64 = 0.5;
pub const PAPER_COMPONENTS: usize = 3000;
pub const PAPER_TRAIN_COUNT: usize = 15_000;
pub const PAPER_TEST_COUNT: usize = 5_000;
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 64;

/// Component means for index `k = 0..K`:
///
/// 1. `a1 = k mod N`, `mu[a1] = (-1)^k * spread`;
/// 2. `a2 = (k + K/2) mod N`; if `a2 != a1`, `mu[a2] = (-1)^(k+1) * spread / 2`;
/// 3. if `K > N` and `k >= N`: `b = (a1 + k/N) mod N`, and
///    `mu[b] += s * 0.1 * spread * (k/N)` with `s = +1` when `k mod 3 == 0`,
///    otherwise `-1`. This accumulates onto whatever steps 1 and 2 wrote.
///
/// Integer division is floor division on non-negative operands.
pub fn build_means(n_dim: usize, k: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|ki| {
            let mut mu = vec![0.0; n_dim];
            let sign = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
            let a1 = ki % n_dim;
            mu[a1] = sign(ki) * spread;
            let a2 = (ki + k / 2) % n_dim;
            if a2 != a1 {
                mu[a2] = sign(ki + 1) * 0.5 * spread;
            }
            if k > n_dim && ki >= n_dim {
                let shell = ki / n_dim;
                let b = (a1 + shell) % n_dim;
                let s = if ki % 3 == 0 { 1.0 } else { -1.0 };
                mu[b] += s * 0.1 * spread * shell as f64;
            }
            mu
        })
        .collect()
}

/// Mixture definition. Weights are always uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    n_dim: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    cov_scale: f64,
    spread: f64,
}

impl GmmSpec {
    /// The benchmark mixture with means from [`build_means`].
    pub fn new(n_dim: usize, k: usize, spread: f64, cov_scale: f64) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&n_dim) {
            return Err(Error::InvalidArgument("mixture dimension must lie in [2, 64]"));
        }
        if !spread.is_finite() {
            return Err(Error::InvalidArgument("spread must be finite"));
        }
        let mut spec = Self::from_means(build_means(n_dim, k, spread), cov_scale)?;
        spec.spread = spread;
        Ok(spec)
    }

    /// Equal-weight mixture over explicit means. `spread` is reported as 0.
    pub fn from_means(means: Vec<Vec<f64>>, cov_scale: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidArgument("a mixture needs at least one component"));
        }
        if !(cov_scale > 0.0 && cov_scale.is_finite()) {
            return Err(Error::InvalidArgument("covariance scale must be positive"));
        }
        let n_dim = means[0].len();
        if n_dim == 0 {
            return Err(Error::InvalidArgument("mixture dimension must be positive"));
        }
        for (i, mu) in means.iter().enumerate() {
            check_len("component mean", n_dim, mu.len())?;
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "component mean",
                    index: i,
                });
            }
        }
        let k = means.len();
        Ok(GmmSpec {
            n_dim,
            weights: vec![1.0 / k as f64; k],
            means,
            cov_scale,
            spread: 0.0,
        })
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn cov_scale(&self) -> f64 {
        self.cov_scale
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    /// `sum_k pi_k mu_k`.
    pub fn mixture_mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_dim];
        for (w, mu) in self.weights.iter().zip(&self.means) {
            for (acc, v) in m.iter_mut().zip(mu) {
                *acc += w * v;
            }
        }
        m
    }

    /// Per-coordinate variance of the mixture.
    pub fn mixture_variance(&self) -> Vec<f64> {
        let mean = self.mixture_mean();
        let mut second = vec![0.0; self.n_dim];
        for (w, mu) in self.weights.iter().zip(&self.means) {
            for (acc, v) in second.iter_mut().zip(mu) {
                *acc += w * v * v;
            }
        }
        second
            .iter()
            .zip(&mean)
            .map(|(s, m)| self.cov_scale + s - m * m)
            .collect()
    }

    /// FNV-1a over the dimension, count and the bit patterns of every value.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |word: u64| {
            for byte in word.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.n_dim as u64);
        feed(self.k() as u64);
        feed(self.cov_scale.to_bits());
        feed(self.spread.to_bits());
        for mu in &self.means {
            for v in mu {
                feed(v.to_bits());
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub spec_hash: u64,
    pub seed: u64,
    pub split: Split,
}

/// Row-major point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_dim: usize,
    points: Vec<f64>,
    provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(n_dim: usize, points: Vec<f64>) -> Result<Self> {
        if n_dim == 0 {
            return Err(Error::InvalidArgument("dataset dimension must be positive"));
        }
        if points.len() % n_dim != 0 {
            return Err(Error::InvalidArgument("point buffer is not a whole number of rows"));
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "dataset value",
                index: i,
            });
        }
        Ok(Dataset {
            n_dim,
            points,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.n_dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_dim..(i + 1) * self.n_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.n_dim)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }
}

/// Draws `count` points. Per point: one `rng.below(K)` for the component,
/// then `N` normals.
pub fn sample_dataset(spec: &GmmSpec, count: usize, seed: u64, split: Split) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive"));
    }
    let mut rng = Prng::new(seed);
    let n = spec.n_dim;
    let sd = sqrt(spec.cov_scale);
    let mut points = Vec::with_capacity(count * n);
    for _ in 0..count {
        let mu = &spec.means[rng.below(spec.k())];
        for &m in mu {
            points.push(m + sd * rng.normal());
        }
    }
    Ok(Dataset::new(n, points)?.with_provenance(Provenance {
        spec_hash: spec.fingerprint(),
        seed,
        split,
    }))
}

/// `log pi_k + log N(x; offset_k, var I)` for every component, where the
/// component centres are `scale * mu_k`.
pub(crate) fn component_log_terms(spec: &GmmSpec, x: &[f64], scale: f64, var: f64) -> Vec<f64> {
    let n = spec.n_dim as f64;
    let norm = -0.5 * n * log(2.0 * PI * var);
    spec.means
        .iter()
        .zip(&spec.weights)
        .map(|(mu, w)| {
            let d2: f64 = x
                .iter()
                .zip(mu)
                .map(|(xi, m)| (xi - scale * m) * (xi - scale * m))
                .sum();
            log(*w) + norm - 0.5 * d2 / var
        })
        .collect()
}

/// `log sum_k pi_k N(x; mu_k, cov_scale I)` via log-sum-exp.
pub fn gmm_log_density(spec: &GmmSpec, x: &[f64]) -> Result<f64> {
    check_len("point", spec.n_dim, x.len())?;
    Ok(log_sum_exp(&component_log_terms(spec, x, 1.0, spec.cov_scale)))
}

/// Posterior component probabilities at `x`.
pub fn responsibilities(spec: &GmmSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_len("point", spec.n_dim, x.len())?;
    let terms = component_log_terms(spec, x, 1.0, spec.cov_scale);
    let total = log_sum_exp(&terms);
    Ok(terms.iter().map(|l| crate::math::exp(l - total)).collect())
}
