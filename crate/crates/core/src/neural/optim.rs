use super::mlp::{Grads, Mlp};

/// Adam with global-norm gradient clipping across all trained networks.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(nets: &[Mlp], lr: f64, clip_norm: f64) -> Self {
        let zeros = || nets.iter().map(|n| vec![0.0; n.param_count()]).collect::<Vec<_>>();
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm, t: 0, m: zeros(), v: zeros() }
    }

    /// Scales `grads` so their joint norm is at most `clip_norm`; returns the
    /// norm before clipping.
    pub fn clip(&self, grads: &mut [Grads]) -> f64 {
        let norm = grads.iter().map(Grads::squared_norm).sum::<f64>().sqrt();
        if self.clip_norm > 0.0 && norm > self.clip_norm {
            for g in grads.iter_mut() {
                g.scale(self.clip_norm / norm);
            }
        }
        norm
    }

    pub fn step(&mut self, nets: &mut [Mlp], grads: &mut [Grads]) {
        self.clip(grads);
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, (net, g)) in nets.iter_mut().zip(grads.iter()).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (j, (p, &gj)) in net.params_mut().zip(g.iter()).enumerate() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                *p -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + self.eps);
            }
        }
    }
}
