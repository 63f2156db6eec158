#![allow(dead_code)]

use gaugeflow_core::fm::{cfm_loss, sample_path, PathSample};
use gaugeflow_core::gmm::{sample_dataset, GmmSpec, Split};
use gaugeflow_core::{Prng, TrainableField};

/// Relative error with both magnitudes in the denominator; exact zeros agree.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Paths from the benchmark mixture (spread 25).
pub fn benchmark_batch(n_dim: usize, count: usize, seed: u64) -> Vec<PathSample> {
    let spec = GmmSpec::new(n_dim, 300, 25.0, 0.5).unwrap();
    let data = sample_dataset(&spec, count, seed, Split::Train).unwrap();
    let mut rng = Prng::new(seed ^ 0xabcdef);
    data.rows().map(|x1| sample_path(&mut rng, x1, 1e-5)).collect()
}

/// `L(theta+) - L(theta-)` for the mean squared residual, written as
/// `mean (v+ - v-) . (v+ + v- - 2u)` so the large `|u|^2` terms never have
/// to cancel.
fn loss_difference<M: TrainableField>(plus: &M, minus: &M, batch: &[PathSample]) -> f64 {
    let mut total = 0.0;
    for s in batch {
        let vp = plus.velocity(&s.x_t, s.t).unwrap();
        let vm = minus.velocity(&s.x_t, s.t).unwrap();
        for j in 0..vp.len() {
            total += (vp[j] - vm[j]) * (vp[j] + vm[j] - 2.0 * s.u_target[j]);
        }
    }
    total / batch.len() as f64
}

/// Ridders' extrapolation of central differences: starts at `h0`, shrinks
/// the step by 1.4 per stage and keeps the tableau entry with the smallest
/// error estimate. Returns `(derivative, error_estimate)`.
pub fn ridders<F: FnMut(f64) -> f64>(mut central: F, h0: f64) -> (f64, f64) {
    const SHRINK: f64 = 1.4;
    const STAGES: usize = 10;
    let shrink2 = SHRINK * SHRINK;
    let mut table = vec![vec![0.0; STAGES]; STAGES];
    let mut h = h0;
    table[0][0] = central(h);
    let (mut best, mut err) = (table[0][0], f64::INFINITY);
    for i in 1..STAGES {
        h /= SHRINK;
        table[0][i] = central(h);
        let mut fac = shrink2;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= shrink2;
            let e = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// Compares the analytic CFM gradient with an independent numerical
/// derivative at `probes` parameter indices; returns
/// `(index, analytic, numeric, rel_err)` rows.
pub fn fd_probe<M: TrainableField + Clone>(
    model: &M,
    batch: &[PathSample],
    probes: &[usize],
) -> Vec<(usize, f64, f64, f64)> {
    let mut grads = vec![0.0; model.param_count()];
    cfm_loss(model, batch, &mut grads).unwrap();
    let base = model.flat_params();
    let mut plus_model = model.clone();
    let mut minus_model = model.clone();
    probes
        .iter()
        .map(|&i| {
            let theta = base[i];
            let central = |step: f64| {
                let mut p = base.clone();
                p[i] = theta + step;
                plus_model.set_flat_params(&p).unwrap();
                p[i] = theta - step;
                minus_model.set_flat_params(&p).unwrap();
                loss_difference(&plus_model, &minus_model, batch) / (2.0 * step)
            };
            let (fd, _) = ridders(central, 1e-2 * theta.abs().max(1.0));
            (i, grads[i], fd, rel_err(grads[i], fd))
        })
        .collect()
}

pub fn random_probes(count: usize, total: usize, seed: u64) -> Vec<usize> {
    let mut rng = Prng::new(seed);
    (0..count).map(|_| rng.below(total)).collect()
}
