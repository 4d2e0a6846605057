//! Adam with per-group step counters. Groups without a gradient in a step
//! are skipped entirely: no moment decay, no update.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::params::{Gradients, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub steps: Vec<u64>,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        Adam {
            config,
            m: store.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect(),
            v: store.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect(),
            steps: vec![0; store.len()],
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: f64) {
        let AdamConfig { beta1, beta2, eps } = self.config;
        for id in store.ids().collect::<Vec<_>>() {
            if !grads.is_touched(id) {
                continue;
            }
            let k = id.0;
            self.steps[k] += 1;
            let t = self.steps[k] as i32;
            let bc1 = 1.0 - libm::pow(beta1, t as f64);
            let bc2 = 1.0 - libm::pow(beta2, t as f64);
            let g = grads.get(id);
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (((p, gi), mi), vi) in store.get_mut(id).data.iter_mut().zip(g).zip(m).zip(v) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *p -= lr * m_hat / (math::sqrt(v_hat) + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Tensor;
    use crate::tape::Tape;

    #[test]
    fn minimizes_a_quadratic_and_skips_untouched() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::from_vec(2, 1, vec![3.0, -2.0]).unwrap());
        let idle = store.add("idle", Tensor::from_vec(1, 1, vec![7.0]).unwrap());
        let mut adam = Adam::new(&store, AdamConfig::default());
        for _ in 0..2000 {
            let grads = {
                let mut t = Tape::new(&store);
                let v = t.param(x);
                let sq = t.dot(v, v);
                t.backward(sq)
            };
            adam.step(&mut store, &grads, 0.05);
        }
        assert!(store.get(x).data.iter().all(|v| v.abs() < 1e-2));
        assert_eq!(store.get(idle).data, vec![7.0]);
        assert_eq!(adam.steps[idle.0], 0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::from_vec(1, 1, vec![1.0]).unwrap());
        let mut adam = Adam::new(&store, AdamConfig::default());
        let grads = {
            let mut t = Tape::new(&store);
            let v = t.param(x);
            let sq = t.dot(v, v);
            t.backward(sq)
        };
        adam.step(&mut store, &grads, 0.001);
        assert!((store.get(x).data[0] - 0.999).abs() < 1e-9);
    }
}
