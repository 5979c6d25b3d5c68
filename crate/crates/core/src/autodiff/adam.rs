use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use crate::tensor::Tensor;

/// Optimizer hyperparameters and the annealed learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub learning_rate: f64,
    pub anneal_rate: f64,
    pub anneal_period: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.9,
            eps: 1e-8,
            learning_rate: 0.002,
            anneal_rate: 0.75,
            anneal_period: 5000,
        }
    }
}

impl AdamConfig {
    /// `learning_rate · anneal_rate^(t / anneal_period)` with a real exponent,
    /// rounded to 15 significant digits so decimal rates come out exact.
    pub fn learning_rate(&self, t: u64) -> f64 {
        let periods = t as f64 / self.anneal_period as f64;
        let decay = self.anneal_rate.powf(periods);
        let lr = self.learning_rate * decay;
        format!("{lr:.14e}").parse().unwrap_or(lr)
    }
}

/// Schedule with the default hyperparameters.
pub fn learning_rate(t: u64) -> f64 {
    AdamConfig::default().learning_rate(t)
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || -> Vec<Tensor> {
            params.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect()
        };
        AdamState {
            config,
            first_moment: zeros(),
            second_moment: zeros(),
            t: 0,
        }
    }

    /// Learning rate the next call to [`AdamState::step`] will apply.
    pub fn current_learning_rate(&self) -> f64 {
        self.config.learning_rate(self.t)
    }

    /// One bias-corrected Adam update of every trainable parameter using
    /// `learning_rate(t)`, then `t += 1` and all gradients are cleared.
    /// Returns the learning rate that was applied.
    pub fn step(&mut self, params: &mut ParamStore) -> f64 {
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        let lr = self.current_learning_rate();
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);

        for ((p, m), v) in params
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            if p.trainable {
                let grads = p.grad.values();
                let values = p.value.values_mut();
                for (((w, g), m), v) in values
                    .iter_mut()
                    .zip(grads)
                    .zip(m.values_mut())
                    .zip(v.values_mut())
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
            p.grad.fill(0.0);
        }
        lr
    }
}
