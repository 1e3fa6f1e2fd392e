//! Adam with bias correction over the parameter store.

use crate::params::ParamStore;
use crate::Result;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment buffers per parameter plus the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let m = store
            .ids()
            .map(|id| vec![0.0; store.get(id).numel()])
            .collect::<Vec<_>>();
        let v = m.clone();
        Self { step: 0, m, v }
    }

    pub fn moments(&self, index: usize) -> (&[f64], &[f64]) {
        (&self.m[index], &self.v[index])
    }

    pub fn moments_mut(&mut self, index: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
        (&mut self.m[index], &mut self.v[index])
    }

    /// One update over every parameter. `grads` must be in store order and
    /// complete (the caller turns absent gradients into an error first).
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>], lr: f64) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for (idx, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let g = &grads[idx];
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let p = store.get_mut(id).data_mut();
            for i in 0..g.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
        Ok(())
    }
}
