//! Multitask training: labels, losses, the optimizer and the epoch loop.

pub mod labels;
pub mod loss;
pub mod optim;

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::PreparedDoc;
use crate::error::{Error, Result};
use crate::graph::Gradients;
use crate::model::CorefModel;

pub use labels::LabelSet;
pub use loss::{loss_clust_ant, loss_clust_incr, loss_end, loss_start, LossBreakdown};
pub use optim::{clip_global_norm, param_group, Adam, LrSchedule, ParamGroup};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_heads: f64,
    pub lr_encoder: f64,
    pub epochs: usize,
    /// Documents whose gradients are averaged into one update.
    pub grad_accum_steps: usize,
    pub grad_clip: f64,
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Validations without dev improvement before stopping; `None` never stops.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_heads: 3e-4,
            lr_encoder: 2e-5,
            epochs: 20,
            grad_accum_steps: 4,
            grad_clip: 1.0,
            warmup_fraction: 0.1,
            seed: 0,
            patience: Some(20),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr_heads > 0.0 && self.lr_encoder > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.grad_accum_steps == 0 {
            return Err(Error::Config("grad_accum_steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config("warmup_fraction must lie in [0, 1]".into()));
        }
        if self.grad_clip.is_nan() || self.grad_clip < 0.0 {
            return Err(Error::Config("grad_clip must be non-negative".into()));
        }
        Ok(())
    }

    /// Optimizer updates over the whole run.
    pub fn total_steps(&self, n_docs: usize) -> u64 {
        (self.epochs * n_docs.div_ceil(self.grad_accum_steps)) as u64
    }
}

/// Optimizer state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub adam: Adam,
    pub schedule: LrSchedule,
}

impl OptimizerState {
    pub fn new(config: &TrainConfig, n_docs: usize) -> Self {
        OptimizerState {
            adam: Adam::default(),
            schedule: LrSchedule::new(config.total_steps(n_docs), config.warmup_fraction),
        }
    }
}

/// One update from the mean gradient of `batch`. Returns the summed loss over
/// the batch.
pub fn train_step(
    model: &mut CorefModel,
    batch: &[&PreparedDoc],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<LossBreakdown> {
    let mut total = LossBreakdown::default();
    let mut grads = Gradients::default();
    for doc in batch {
        let (loss, g) = model.loss(doc)?;
        total.add(&loss);
        grads.accumulate(&g);
    }
    if batch.is_empty() {
        return Ok(total);
    }
    grads.scale(1.0 / batch.len() as f64);
    let norm = clip_global_norm(&mut grads, config.grad_clip);
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!("gradient norm at step {}", state.adam.step)));
    }
    let factor = state.schedule.factor(state.adam.step);
    let (heads, encoder) = (config.lr_heads * factor, config.lr_encoder * factor);
    state.adam.update(&mut model.params, &grads, |group| match group {
        ParamGroup::Encoder => encoder,
        ParamGroup::Heads => heads,
    })?;
    Ok(total)
}

/// Epoch loop over a fixed set of prepared segments.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub state: OptimizerState,
    pub epoch: usize,
    docs: Vec<PreparedDoc>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(config: TrainConfig, docs: Vec<PreparedDoc>) -> Result<Self> {
        config.validate()?;
        let state = OptimizerState::new(&config, docs.len());
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Trainer {
            config,
            state,
            epoch: 0,
            docs,
            rng,
        })
    }

    pub fn docs(&self) -> &[PreparedDoc] {
        &self.docs
    }

    /// Runs one shuffled pass; returns the summed loss of the epoch.
    pub fn run_epoch(&mut self, model: &mut CorefModel) -> Result<LossBreakdown> {
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = LossBreakdown::default();
        for chunk in order.chunks(self.config.grad_accum_steps) {
            let batch: Vec<&PreparedDoc> = chunk.iter().map(|&i| &self.docs[i]).collect();
            total.add(&train_step(model, &batch, &mut self.state, &self.config)?);
        }
        self.epoch += 1;
        Ok(total)
    }

    /// Summed loss over all segments without updating.
    pub fn evaluate_loss(&self, model: &CorefModel) -> Result<LossBreakdown> {
        let mut total = LossBreakdown::default();
        for doc in &self.docs {
            total.add(&model.loss(doc)?.0);
        }
        Ok(total)
    }
}
