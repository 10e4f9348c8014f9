//! First-order optimizer: Adam with a stepped exponential
//! learning-rate decay.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate every `decay_every` steps.
    pub decay: f64,
    pub decay_every: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.05,
            decay: 0.9,
            decay_every: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: DVector<f64>,
    v: DVector<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, dim: usize) -> Self {
        AdamState {
            config,
            m: DVector::zeros(dim),
            v: DVector::zeros(dim),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Learning rate the next step will use: lr0 * decay^(completed / every).
    pub fn current_lr(&self) -> f64 {
        self.config.learning_rate * self.config.decay.powi((self.step / self.config.decay_every) as i32)
    }

    /// One Adam update in place. A non-finite gradient leaves the
    /// parameters untouched and reports which block misbehaved.
    pub fn step(&mut self, params: &mut DVector<f64>, grads: &DVector<f64>) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimMismatch("adam parameter/gradient length".into()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                step: self.step,
                block: "joint",
            });
        }
        let lr = self.current_lr();
        let c = &self.config;
        let t = (self.step + 1) as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + c.epsilon);
        }
        self.step += 1;
        Ok(())
    }
}
