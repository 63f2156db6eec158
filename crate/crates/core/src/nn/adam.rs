use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Result};
use crate::math::{pow, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step_segments(&mut [params], grads)
    }

    /// One update over parameters split across several buffers; `grads` is
    /// their concatenation in order.
    pub fn step_segments(&mut self, segments: &mut [&mut [f64]], grads: &[f64]) -> Result<()> {
        let total: usize = segments.iter().map(|s| s.len()).sum();
        check_len("Adam parameters", self.first_moment.len(), total)?;
        check_len("Adam gradients", self.first_moment.len(), grads.len())?;
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as f64;
        let c1 = 1.0 - pow(beta1, t);
        let c2 = 1.0 - pow(beta2, t);
        let mut i = 0;
        for seg in segments.iter_mut() {
            for p in seg.iter_mut() {
                let g = grads[i];
                let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
                let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
                self.first_moment[i] = m;
                self.second_moment[i] = v;
                *p -= learning_rate * (m / c1) / (sqrt(v / c2) + eps);
                i += 1;
            }
        }
        Ok(())
    }
}
