use std::ops::Range;

/// AdamW with decoupled weight decay, updating only the given ranges.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamW {
    pub fn new(n_params: usize, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> AdamW {
        AdamW { beta1, beta2, eps, weight_decay, m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, ranges: &[Range<usize>]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for r in ranges {
            for i in r.clone() {
                let g = grad[i];
                params[i] -= lr * self.weight_decay * params[i];
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Multiplies the base rate by `factor` once per completed epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLr {
    pub base: f64,
    pub factor: f64,
}

impl StepLr {
    pub fn rate(&self, epoch: usize) -> f64 {
        self.base * self.factor.powi(epoch as i32)
    }
}
