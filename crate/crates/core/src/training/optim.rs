//! Adam with two learning-rate groups, warmup/decay schedule and global-norm
//! clipping.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Gradients;
use crate::nn::ENCODER;
use crate::tensor::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Encoder,
    Heads,
}

pub fn param_group(name: &str) -> ParamGroup {
    match name.split('.').next() {
        Some(ENCODER) => ParamGroup::Encoder,
        _ => ParamGroup::Heads,
    }
}

/// Linear warmup over the first `warmup_steps`, then linear decay to zero
/// at `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub total_steps: u64,
    pub warmup_steps: u64,
}

impl LrSchedule {
    pub fn new(total_steps: u64, warmup_fraction: f64) -> Self {
        let warmup_steps = libm::ceil(total_steps as f64 * warmup_fraction) as u64;
        LrSchedule {
            total_steps: total_steps.max(1),
            warmup_steps: warmup_steps.min(total_steps),
        }
    }

    /// Multiplier for the 0-based optimizer step.
    pub fn factor(&self, step: u64) -> f64 {
        if step < self.warmup_steps {
            (step + 1) as f64 / self.warmup_steps as f64
        } else {
            let remaining = self.total_steps.saturating_sub(step) as f64;
            let span = (self.total_steps - self.warmup_steps).max(1) as f64;
            (remaining / span).clamp(0.0, 1.0)
        }
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: BTreeMap::new(),
        }
    }
}

impl Adam {
    /// One bias-corrected update. `lr(group)` gives the rate for each group
    /// at this step.
    pub fn update(
        &mut self,
        params: &mut ModelParams,
        grads: &Gradients,
        lr: impl Fn(ParamGroup) -> f64,
    ) -> Result<()> {
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        for (name, tensor) in params.iter_mut() {
            let Some(grad) = grads.get(name) else {
                continue;
            };
            if grad.data.len() != tensor.len() {
                return Err(Error::dim("Adam::update", name.clone()));
            }
            let rate = lr(param_group(name));
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; grad.data.len()], vec![0.0; grad.data.len()]));
            for (k, value) in tensor.data_mut().iter_mut().enumerate() {
                let g = grad.data[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
                let step = rate * (m[k] / c1) / (libm::sqrt(v[k] / c2) + self.eps);
                *value = (f64::from(*value) - step) as f32;
            }
        }
        Ok(())
    }
}
