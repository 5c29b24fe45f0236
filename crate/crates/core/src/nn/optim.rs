use crate::nn::network::{Gradients, LayerParams};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with bias-corrected moment estimates. Moments are kept in `f64`.
#[derive(Clone, Debug)]
pub struct Adam {
    pub cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<T: Scalar>(cfg: AdamConfig, params: &[LayerParams<T>]) -> Self {
        let sizes: Vec<usize> = params.iter().flat_map(|p| [p.weights.len(), p.bias.len()]).collect();
        Self {
            cfg,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<T: Scalar>(&mut self, params: &mut [LayerParams<T>], grads: &Gradients<T>) {
        self.step += 1;
        let AdamConfig { learning_rate: lr, beta1: b1, beta2: b2, epsilon: eps } = self.cfg;
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let slots = params
            .iter_mut()
            .zip(grads)
            .flat_map(|(p, g)| [(&mut p.weights, &g.weights), (&mut p.bias, &g.bias)]);
        for ((theta, grad), (m, v)) in slots.zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for i in 0..theta.len() {
                let g = grad[i].to_f64_lossy();
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let update = lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                theta[i] = T::from_f64_lossy(theta[i].to_f64_lossy() - update);
            }
        }
    }
}
