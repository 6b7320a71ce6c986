use serde::{Deserialize, Serialize};

use super::{ParamStore, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    /// Multiplicative learning-rate decay applied once per step.
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm limit; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            decay: 0.9999,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(5.0),
        }
    }
}

/// Adam moments and step counter for one [`ParamStore`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, store: &ParamStore<T>) -> Self {
        let zeros = || store.iter().map(|p| vec![T::zero(); p.value.len()]).collect();
        AdamState {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// Learning rate used by the next step.
    pub fn current_lr(&self) -> f64 {
        self.config.lr * self.config.decay.powf(self.step as f64)
    }

    /// Applies one update from the stored gradients, then clears them.
    /// Returns the gradient norm before clipping.
    pub fn apply(&mut self, store: &mut ParamStore<T>) -> f64 {
        let norm = match self.config.clip_norm {
            Some(limit) => store.clip_grad_norm(limit),
            None => store.grad_norm(),
        };
        let c = &self.config;
        let lr = self.current_lr();
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let correct1 = T::of(1.0 - c.beta1.powi(t));
        let correct2 = T::of(1.0 - c.beta2.powi(t));
        let (lr, eps) = (T::of(lr), T::of(c.eps));
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let (value, grad) = (p.value.data_mut(), p.grad.data());
            for k in 0..value.len() {
                let g = grad[k];
                m[k] = b1 * m[k] + (T::one() - b1) * g;
                v[k] = b2 * v[k] + (T::one() - b2) * g * g;
                let mhat = m[k] / correct1;
                let vhat = v[k] / correct2;
                value[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        store.zero_grad();
        norm
    }
}
