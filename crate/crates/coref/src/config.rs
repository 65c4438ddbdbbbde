//! Flat JSON run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use coref_core::clusterers::ClustererKind;
use coref_core::model::{DecodeOptions, ModelConfig};
use coref_core::nn::EncoderConfig;
use coref_core::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub max_len: usize,
    /// Upper bound on vocabulary size including `[UNK]`; `None` keeps every
    /// training token.
    pub vocab: Option<usize>,
    pub d_hid: usize,
    pub d_pair: usize,
    pub clusterer: String,
    pub threshold: f64,
    pub emit_singletons: bool,
    pub speaker_prefix: bool,
    pub lr_heads: f64,
    pub lr_encoder: f64,
    pub epochs: usize,
    pub grad_accum_steps: usize,
    pub grad_clip: f64,
    pub warmup_fraction: f64,
    pub seed: u64,
    pub patience: Option<usize>,
    /// Validate on the dev set every this many epochs.
    pub validate_every: usize,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            d_model: 32,
            layers: 2,
            heads: 4,
            max_len: 256,
            vocab: None,
            d_hid: 64,
            d_pair: 32,
            clusterer: "s2e".into(),
            threshold: 0.5,
            emit_singletons: false,
            speaker_prefix: true,
            lr_heads: t.lr_heads,
            lr_encoder: t.lr_encoder,
            epochs: t.epochs,
            grad_accum_steps: t.grad_accum_steps,
            grad_clip: t.grad_clip,
            warmup_fraction: t.warmup_fraction,
            seed: t.seed,
            patience: t.patience,
            validate_every: 1,
            train: None,
            dev: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn kind(&self) -> anyhow::Result<ClustererKind> {
        ClustererKind::parse(&self.clusterer)
            .with_context(|| format!("unknown clusterer {:?} (expected s2e, mes or incr)", self.clusterer))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must lie strictly between 0 and 1");
        }
        if self.validate_every == 0 {
            bail!("validate_every must be at least 1");
        }
        if self.vocab == Some(0) {
            bail!("vocab must be positive");
        }
        self.train_config().validate()?;
        let mut model = self.model_config()?;
        model.encoder.vocab = 1;
        model.validate()?;
        Ok(())
    }

    /// Model shape; `encoder.vocab` is filled in once the vocabulary exists.
    pub fn model_config(&self) -> anyhow::Result<ModelConfig> {
        Ok(ModelConfig {
            encoder: EncoderConfig {
                vocab: 0,
                d_model: self.d_model,
                layers: self.layers,
                heads: self.heads,
                max_len: self.max_len,
            },
            d_hid: self.d_hid,
            d_pair: self.d_pair,
            kind: self.kind()?,
            speaker_prefix: self.speaker_prefix,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_heads: self.lr_heads,
            lr_encoder: self.lr_encoder,
            epochs: self.epochs,
            grad_accum_steps: self.grad_accum_steps,
            grad_clip: self.grad_clip,
            warmup_fraction: self.warmup_fraction,
            seed: self.seed,
            patience: self.patience,
        }
    }

    pub fn decode_options(&self) -> DecodeOptions {
        DecodeOptions {
            threshold: self.threshold,
            emit_singletons: self.emit_singletons,
            gold_mentions: false,
        }
    }
}
