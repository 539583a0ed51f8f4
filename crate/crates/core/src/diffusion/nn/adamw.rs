//! AdamW with decoupled weight decay and a warmup + cosine learning-rate
//! schedule.

use super::Elem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    /// Step count the cosine decay spans; 0 disables the schedule.
    pub total_steps: usize,
    /// Final LR as a fraction of the peak.
    pub min_lr_frac: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            warmup_steps: 50,
            total_steps: 0,
            min_lr_frac: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW<E> {
    pub config: AdamWConfig,
    pub m: Vec<E>,
    pub v: Vec<E>,
    pub step: usize,
}

impl<E: Elem> AdamW<E> {
    pub fn new(config: AdamWConfig, param_count: usize) -> Self {
        AdamW { config, m: vec![E::zero(); param_count], v: vec![E::zero(); param_count], step: 0 }
    }

    /// Learning rate at the given 1-based step: linear warmup, then cosine
    /// decay to `min_lr_frac * lr`.
    pub fn lr_at(&self, step: usize) -> f64 {
        let c = &self.config;
        if c.warmup_steps > 0 && step <= c.warmup_steps {
            return c.lr * step as f64 / c.warmup_steps as f64;
        }
        if c.total_steps == 0 || c.total_steps <= c.warmup_steps {
            return c.lr;
        }
        let progress = ((step - c.warmup_steps) as f64
            / (c.total_steps - c.warmup_steps) as f64)
            .clamp(0.0, 1.0);
        let floor = c.lr * c.min_lr_frac;
        floor + (c.lr - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }

    pub fn update(&mut self, params: &mut [E], grads: &[E]) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(params.len(), grads.len());
        self.step += 1;
        let lr = E::from_f64_c(self.lr_at(self.step));
        let c = &self.config;
        let b1 = E::from_f64_c(c.beta1);
        let b2 = E::from_f64_c(c.beta2);
        let one = E::one();
        let bc1 = E::from_f64_c(1.0 - c.beta1.powi(self.step as i32));
        let bc2 = E::from_f64_c(1.0 - c.beta2.powi(self.step as i32));
        let eps = E::from_f64_c(c.eps);
        let wd = E::from_f64_c(c.weight_decay);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * (m_hat / (v_hat.sqrt() + eps) + wd * params[i]);
        }
    }
}
