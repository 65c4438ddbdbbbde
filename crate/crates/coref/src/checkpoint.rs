//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//! `MVRK`, version byte, u32 record count, then per tensor: u32 name length,
//! UTF-8 name, u32 rank, u32 per dimension, f32 payload in row-major order;
//! finally a u32-length-prefixed UTF-8 JSON blob with the configuration.

use serde::{Deserialize, Serialize};

use coref_core::corpus::Vocab;
use coref_core::model::CorefModel;
use coref_core::{ModelParams, Tensor};

use crate::config::RunConfig;

pub const MAGIC: &[u8; 4] = b"MVRK";
pub const VERSION: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u8),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after the configuration blob")]
    Trailing(usize),
    #[error("invalid tensor {name}: {reason}")]
    Tensor { name: String, reason: String },
    #[error("invalid configuration blob: {0}")]
    Config(String),
}

#[derive(Serialize, Deserialize)]
struct Blob {
    param_seed: u64,
    config: serde_json::Value,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("fits in u32").to_le_bytes());
}

pub fn save_checkpoint(params: &ModelParams, config: &serde_json::Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.num_scalars() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    put_u32(&mut out, params.len());
    for (name, tensor) in params.iter() {
        put_u32(&mut out, name.len());
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, tensor.dims().len());
        for &d in tensor.dims() {
            put_u32(&mut out, d);
        }
        for v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let blob = serde_json::to_string(&Blob {
        param_seed: params.rng_seed,
        config: config.clone(),
    })
    .expect("JSON values serialize");
    put_u32(&mut out, blob.len());
    out.extend_from_slice(blob.as_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() < n {
            return Err(CheckpointError::Truncated(what));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self, what: &'static str) -> Result<usize, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<(ModelParams, serde_json::Value), CheckpointError> {
    let mut r = Reader { bytes };
    if r.take(4, "magic").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = r.u32("record count")?;
    let mut tensors = Vec::new();
    for _ in 0..count {
        let len = r.u32("name length")?;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| CheckpointError::Tensor {
                name: "?".into(),
                reason: "name is not UTF-8".into(),
            })?
            .to_string();
        let rank = r.u32("rank")?;
        let dims = (0..rank).map(|_| r.u32("dimensions")).collect::<Result<Vec<_>, _>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n.checked_mul(4).is_some_and(|b| b <= r.bytes.len()))
            .ok_or(CheckpointError::Truncated("payload"))?;
        let data = r
            .take(n * 4, "payload")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = Tensor::new(dims, data).map_err(|e| CheckpointError::Tensor {
            name: name.clone(),
            reason: e.to_string(),
        })?;
        tensors.push((name, tensor));
    }
    let len = r.u32("configuration length")?;
    let blob: Blob = serde_json::from_slice(r.take(len, "configuration")?)
        .map_err(|e| CheckpointError::Config(e.to_string()))?;
    if !r.bytes.is_empty() {
        return Err(CheckpointError::Trailing(r.bytes.len()));
    }
    let mut params = ModelParams::new(blob.param_seed);
    for (name, tensor) in tensors {
        params.insert(name.clone(), tensor).map_err(|e| CheckpointError::Tensor {
            name,
            reason: e.to_string(),
        })?;
    }
    Ok((params, blob.config))
}

/// What a model checkpoint stores besides tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub run: RunConfig,
    pub vocab: Vec<String>,
}

pub fn save_model(model: &CorefModel, run: &RunConfig) -> Vec<u8> {
    // Paths are run-specific; leaving them out keeps checkpoints of
    // identical runs byte-identical wherever they were written.
    let meta = ModelMeta {
        run: RunConfig {
            train: None,
            dev: None,
            out: None,
            ..run.clone()
        },
        vocab: model.vocab.tokens().to_vec(),
    };
    save_checkpoint(&model.params, &serde_json::to_value(meta).expect("metadata serializes"))
}

/// Rebuilds a model and checks its tensors against the stored shape.
pub fn load_model(bytes: &[u8]) -> anyhow::Result<(CorefModel, RunConfig)> {
    let (params, value) = load_checkpoint(bytes)?;
    let meta: ModelMeta = serde_json::from_value(value).map_err(|e| CheckpointError::Config(e.to_string()))?;
    let vocab = Vocab::from_tokens(meta.vocab.into_iter().skip(1).collect());
    let mut config = meta.run.model_config()?;
    config.encoder.vocab = vocab.len();
    let expected = config.init_params(0)?;
    for (name, tensor) in expected.iter() {
        let found = params
            .get(name)
            .map_err(|_| anyhow::anyhow!("checkpoint lacks parameter {name} required by its configuration"))?;
        if found.dims() != tensor.dims() {
            anyhow::bail!(
                "parameter {name} has shape {:?}, configuration implies {:?}",
                found.dims(),
                tensor.dims()
            );
        }
    }
    if params.len() != expected.len() {
        anyhow::bail!("checkpoint has {} tensors, configuration implies {}", params.len(), expected.len());
    }
    Ok((CorefModel::new(config, params, vocab)?, meta.run))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        let mut p = ModelParams::new(42);
        p.insert("a.W", Tensor::new(vec![2, 3], vec![1.0, -0.0, 3.5, f32::MIN_POSITIVE, 1e-30, -7.25]).unwrap())
            .unwrap();
        p.insert("b", Tensor::new(vec![1], vec![0.1]).unwrap()).unwrap();
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let config = serde_json::json!({"k": 1});
        let bytes = save_checkpoint(&params(), &config);
        let (back, c) = load_checkpoint(&bytes).unwrap();
        assert_eq!(c, config);
        assert_eq!(back.rng_seed, 42);
        for ((n1, t1), (n2, t2)) in params().iter().zip(back.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.dims(), t2.dims());
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(t1), bits(t2));
        }
        assert_eq!(save_checkpoint(&back, &c), bytes);
    }

    #[test]
    fn corrupt_inputs() {
        let bytes = save_checkpoint(&params(), &serde_json::Value::Null);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(load_checkpoint(&bad), Err(CheckpointError::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(load_checkpoint(&bad), Err(CheckpointError::Version(2))));
        for cut in [3, 5, 10, 20, bytes.len() - 1] {
            assert!(load_checkpoint(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(load_checkpoint(&long), Err(CheckpointError::Trailing(1))));
    }

    #[test]
    fn empty_params() {
        let bytes = save_checkpoint(&ModelParams::new(0), &serde_json::json!({}));
        assert_eq!(&bytes[..5], b"MVRK\x01");
        let (p, _) = load_checkpoint(&bytes).unwrap();
        assert!(p.is_empty());
    }
}
