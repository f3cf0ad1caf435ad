use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplicative decay applied every `decay_every` epochs.
    pub decay: f64,
    pub decay_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 7.5e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, decay: 0.98, decay_every: 50 }
    }
}

/// Step-decayed learning rate for a zero-based epoch.
pub fn learning_rate(cfg: &AdamConfig, epoch: usize) -> f64 {
    cfg.lr * cfg.decay.powi((epoch / cfg.decay_every.max(1)) as i32)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: usize) -> Self {
        Adam { config, m: vec![0.0; params], v: vec![0.0; params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let (b1, b2) = (self.config.beta1, self.config.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + self.config.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0, 0.5];
        let mut adam = Adam::new(AdamConfig::default(), 3);
        adam.step(&mut p, &[0.0; 3], 1e-3);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn schedule_decays_every_fifty_epochs() {
        let cfg = AdamConfig::default();
        assert_eq!(learning_rate(&cfg, 0), 7.5e-4);
        assert_eq!(learning_rate(&cfg, 49), 7.5e-4);
        for k in 1..5 {
            assert!((learning_rate(&cfg, 50 * k) - 7.5e-4 * 0.98f64.powi(k as i32)).abs() < 1e-18);
        }
    }

    #[test]
    fn quadratic_converges() {
        // (x - 3)^2 has its minimum at 3
        let mut x = vec![-4.0];
        let mut adam = Adam::new(AdamConfig::default(), 1);
        let mut steps = 0;
        while (x[0] - 3.0f64).abs() >= 1e-6 && steps < 2000 {
            let g = 2.0 * (x[0] - 3.0);
            adam.step(&mut x, &[g], 0.1);
            steps += 1;
        }
        assert!((x[0] - 3.0).abs() < 1e-6, "x = {} after {steps} steps", x[0]);
    }
}
