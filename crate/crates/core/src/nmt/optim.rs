//! Adam with global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use super::params::Seq2SeqParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Gradients with a larger global L2 norm are rescaled to this norm;
    /// `0` disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Seq2SeqParams,
    v: Seq2SeqParams,
    step: i32,
}

/// Scales `g` in place so its global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(g: &mut Seq2SeqParams, max_norm: f64) -> f64 {
    let norm = g.global_norm();
    if max_norm > 0.0 && norm > max_norm {
        g.scale(max_norm / norm);
    }
    norm
}

impl Adam {
    pub fn new(params: &Seq2SeqParams, config: AdamConfig) -> Self {
        Adam { config, m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Clips `grad`, then applies one bias-corrected update to `params`.
    pub fn update(&mut self, params: &mut Seq2SeqParams, grad: &mut Seq2SeqParams) -> f64 {
        let c = self.config;
        let norm = clip_global_norm(grad, c.clip_norm);
        self.step += 1;
        let bc1 = 1.0 - c.beta1.powi(self.step);
        let bc2 = 1.0 - c.beta2.powi(self.step);
        let grads = grad.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grads).zip(ms).zip(vs) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * gi;
                v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * gi * gi;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.data[i] -= c.learning_rate * mh / (vh.sqrt() + c.eps);
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::params::ModelDims;

    const D: ModelDims = ModelDims { src_vocab: 6, tgt_vocab: 6, embed: 2, hidden: 3 };

    #[test]
    fn first_step_moves_each_coordinate_by_lr() {
        let mut p = Seq2SeqParams::zeros(D);
        let mut g = p.zeros_like();
        g.out_b.data[0] = 0.01;
        g.out_b.data[1] = -0.02;
        let mut opt = Adam::new(&p, AdamConfig { clip_norm: 0.0, ..AdamConfig::default() });
        opt.update(&mut p, &mut g);
        assert!((p.out_b.data[0] + 1e-3).abs() < 1e-9);
        assert!((p.out_b.data[1] - 1e-3).abs() < 1e-9);
        assert_eq!(p.out_b.data[2], 0.0);
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = Seq2SeqParams::zeros(D);
        g.out_w.data[0] = 3.0;
        g.out_w.data[1] = 4.0;
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-15);
        let before = g.clone();
        clip_global_norm(&mut g, 2.0);
        assert_eq!(g, before);
    }
}
