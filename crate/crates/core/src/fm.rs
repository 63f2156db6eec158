//! Conditional flow matching on the linear path.
//!
//! For a data point `x1` and a base draw `x0 ~ N(0, I)` the path is
//! `x_t = (1 - t) x0 + t x1` with conditional target `u = x1 - x0`. The
//! model regresses onto `u` in squared Euclidean norm; in expectation this
//! matches the marginal field, which for mixture data is available in
//! closed form through [`marginal_velocity_oracle`].
//!
//! Training and evaluation draw `t` uniformly on `[0, 1 - eps)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::flow::{TrainableField, VelocityField};
use crate::gmm::{component_log_terms, Dataset, GmmSpec};
use crate::math::{exp, log_sum_exp, sqrt};
use crate::nn::{AdamConfig, AdamState};
use crate::rng::Prng;

pub const DEFAULT_T_CLAMP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub x_t: Vec<f64>,
    pub u_target: Vec<f64>,
}

impl PathSample {
    /// Builds the sample for given endpoints and time.
    pub fn at(t: f64, x0: Vec<f64>, x1: Vec<f64>) -> Self {
        let x_t = x0.iter().zip(&x1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let u_target = x0.iter().zip(&x1).map(|(a, b)| b - a).collect();
        PathSample {
            t,
            x0,
            x1,
            x_t,
            u_target,
        }
    }
}

/// Draws `t` (one uniform) then `x0` (`N` normals).
pub fn sample_path(rng: &mut Prng, x1: &[f64], t_clamp: f64) -> PathSample {
    let t = rng.uniform() * (1.0 - t_clamp);
    let mut x0 = vec![0.0; x1.len()];
    rng.fill_normal(&mut x0);
    PathSample::at(t, x0, x1.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub t_clamp: f64,
    /// Batch reductions always run in index order in this crate; the flag is
    /// carried so callers can record how a run was configured.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            t_clamp: DEFAULT_T_CLAMP,
            deterministic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be finite and non-negative"));
        }
        if !(self.t_clamp > 0.0 && self.t_clamp < 0.5) {
            return Err(Error::InvalidArgument("t clamp must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Mean squared residual over `batch`; `grads` is overwritten with its
/// gradient. Samples are reduced in index order.
pub fn cfm_loss<M: TrainableField + ?Sized>(model: &M, batch: &[PathSample], grads: &mut [f64]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("loss batch is empty"));
    }
    check_len("parameter gradient", model.param_count(), grads.len())?;
    grads.fill(0.0);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (i, s) in batch.iter().enumerate() {
        check_len("path sample", model.n_dim(), s.x_t.len())?;
        let (v, trace) = model.forward(&s.x_t, s.t)?;
        let resid: Vec<f64> = v.iter().zip(&s.u_target).map(|(a, b)| a - b).collect();
        let sq: f64 = resid.iter().map(|r| r * r).sum();
        if !sq.is_finite() {
            return Err(Error::NonFinite {
                what: "CFM loss",
                index: i,
            });
        }
        total += sq;
        let grad_v: Vec<f64> = resid.iter().map(|r| 2.0 * scale * r).collect();
        model.backward_into(&trace, &grad_v, grads)?;
    }
    Ok(total * scale)
}

/// Loss only, for any velocity field.
pub fn cfm_loss_value<F: VelocityField + ?Sized>(field: &F, batch: &[PathSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("loss batch is empty"));
    }
    let mut total = 0.0;
    for (i, s) in batch.iter().enumerate() {
        let sq = squared_residual(field, s)?;
        if !sq.is_finite() {
            return Err(Error::NonFinite {
                what: "CFM loss",
                index: i,
            });
        }
        total += sq;
    }
    Ok(total / batch.len() as f64)
}

fn squared_residual<F: VelocityField + ?Sized>(field: &F, s: &PathSample) -> Result<f64> {
    let v = field.velocity(&s.x_t, s.t)?;
    Ok(v.iter().zip(&s.u_target).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean of the batch losses seen during the epoch (weighted by batch size).
    pub train_loss: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub total_steps: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.train_loss)
    }
}

pub fn train<M: TrainableField>(model: &mut M, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(model, data, cfg, |_, _| {})
}

/// Adam on the CFM loss: `epochs x ceil(len / batch_size)` steps.
///
/// One stream `Prng::new(cfg.seed)` drives everything: at the start of each
/// epoch it reshuffles the visiting order, then every visited point takes
/// one path sample. `on_epoch` runs after each epoch.
pub fn train_with<M, C>(model: &mut M, data: &Dataset, cfg: &TrainConfig, mut on_epoch: C) -> Result<TrainReport>
where
    M: TrainableField,
    C: FnMut(&EpochStats, &M),
{
    cfg.validate()?;
    check_len("dataset dimension", model.n_dim(), data.n_dim())?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty"));
    }
    let mut rng = Prng::new(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut adam = AdamState::new(
        model.param_count(),
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut grads = vec![0.0; model.param_count()];
    let t_max = 1.0 - cfg.t_clamp;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut total_steps = 0;
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut steps = 0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<PathSample> = chunk
                .iter()
                .map(|&i| sample_path(&mut rng, data.point(i), cfg.t_clamp))
                .collect();
            assert!(batch.iter().all(|s| s.t < t_max), "path time escaped the clamp");
            let loss = match cfm_loss(model, &batch, &mut grads) {
                Ok(l) => l,
                Err(Error::NonFinite { .. }) => return Err(Error::Diverged { epoch, step: b }),
                Err(e) => return Err(e),
            };
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, step: b });
            }
            adam.step_segments(&mut model.param_segments_mut(), &grads)?;
            loss_sum += loss * chunk.len() as f64;
            steps += 1;
        }
        total_steps += steps;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            steps,
        };
        on_epoch(&stats, model);
        epochs.push(stats);
    }
    Ok(TrainReport { epochs, total_steps })
}

/// Squared residual of every evaluation draw, in stream order.
///
/// `Prng::new(seed)` supplies `draws` path samples per point, points in
/// dataset order, so two fields evaluated with the same seed see the same
/// `(t, x0)` pairs.
pub fn eval_loss_samples<F: VelocityField + ?Sized>(
    field: &F,
    data: &Dataset,
    seed: u64,
    draws: usize,
) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::InvalidArgument("draws per point must be at least 1"));
    }
    check_len("dataset dimension", field.n_dim(), data.n_dim())?;
    let mut rng = Prng::new(seed);
    let mut out = Vec::with_capacity(data.len() * draws);
    for x1 in data.rows() {
        for _ in 0..draws {
            let s = sample_path(&mut rng, x1, DEFAULT_T_CLAMP);
            out.push(squared_residual(field, &s)?);
        }
    }
    Ok(out)
}

/// Held-out CFM loss with fresh `(t, x0)` draws.
pub fn eval_loss<F: VelocityField + ?Sized>(field: &F, data: &Dataset, seed: u64, draws: usize) -> Result<f64> {
    Ok(mean_and_std_err(&eval_loss_samples(field, data, seed, draws)?).0)
}

/// Sample mean and its standard error.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}

/// Marginal velocity `u_t(x) = (E[x1 | x_t = x] - x) / (1 - t)` for mixture
/// endpoints.
///
/// Given component `k`, `x_t ~ N(t mu_k, s^2 I)` with
/// `s^2 = t^2 sigma^2 + (1 - t)^2`, and the posterior mean of `x1` is
/// `mu_k + (t sigma^2 / s^2)(x - t mu_k)`. Components are mixed by their
/// log-space responsibilities.
pub fn marginal_velocity_oracle(spec: &GmmSpec, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidArgument("marginal velocity needs 0 <= t < 1"));
    }
    check_len("point", spec.n_dim(), x.len())?;
    let sigma2 = spec.cov_scale();
    let one_minus = 1.0 - t;
    let s2 = t * t * sigma2 + one_minus * one_minus;
    let gain = t * sigma2 / s2;
    let terms = component_log_terms(spec, x, t, s2);
    let total = log_sum_exp(&terms);
    let mut posterior = vec![0.0; x.len()];
    for (mu, l) in spec.means().iter().zip(&terms) {
        let r = exp(l - total);
        if r == 0.0 {
            continue;
        }
        for ((p, &m), &xi) in posterior.iter_mut().zip(mu).zip(x) {
            *p += r * (m + gain * (xi - t * m));
        }
    }
    Ok(posterior.iter().zip(x).map(|(p, xi)| (p - xi) / one_minus).collect())
}

/// The oracle as a [`VelocityField`].
#[derive(Debug, Clone, Copy)]
pub struct MarginalOracle<'a> {
    spec: &'a GmmSpec,
}

impl<'a> MarginalOracle<'a> {
    pub fn new(spec: &'a GmmSpec) -> Self {
        MarginalOracle { spec }
    }
}

impl VelocityField for MarginalOracle<'_> {
    fn n_dim(&self) -> usize {
        self.spec.n_dim()
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        marginal_velocity_oracle(self.spec, t, x)
    }
}
