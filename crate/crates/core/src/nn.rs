//! Activation functions, bias-free feed-forward projections and the small
//! pre-norm transformer used both as the document encoder and as the
//! incremental clusterer's cluster reader.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::{ModelParams, ParamInit, Tensor};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GeLU, `x · Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2)) + x * INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `W_prime · GeLU(W · x)` with `W: [d_hid, d_in]`, `W_prime: [d_out, d_hid]`.
pub fn ffn_project(x: &[f32], w: &Tensor, w_prime: &Tensor) -> Result<Vec<f32>> {
    let (d_hid, d_in) = w.as_matrix_shape();
    let (d_out, d_hid2) = w_prime.as_matrix_shape();
    if d_in != x.len() || d_hid != d_hid2 {
        return Err(Error::dim(
            "ffn_project",
            format!(
                "x[{}] through W[{d_hid}x{d_in}] and W_prime[{d_out}x{d_hid2}]",
                x.len()
            ),
        ));
    }
    let hidden: Vec<f64> = (0..d_hid)
        .map(|r| {
            let pre: f64 = w
                .row(r)
                .iter()
                .zip(x)
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            gelu(pre)
        })
        .collect();
    Ok((0..d_out)
        .map(|r| {
            w_prime
                .row(r)
                .iter()
                .zip(&hidden)
                .map(|(&a, b)| f64::from(a) * b)
                .sum::<f64>() as f32
        })
        .collect())
}

/// Graph form of [`ffn_project`] reading `{prefix}.W` and `{prefix}.W_prime`;
/// applies to every row of `x`.
pub fn ffn(g: &mut Graph<'_>, x: NodeId, prefix: &str) -> Result<NodeId> {
    let w = g.param(&format!("{prefix}.W"))?;
    let w_prime = g.param(&format!("{prefix}.W_prime"))?;
    let h = g.matmul_nt(x, w)?;
    let h = g.gelu(h)?;
    g.matmul_nt(h, w_prime)
}

pub fn init_ffn(init: &mut ParamInit, prefix: &str, d_in: usize, d_hid: usize, d_out: usize) -> Result<()> {
    init.weight(&format!("{prefix}.W"), d_hid, d_in)?;
    init.weight(&format!("{prefix}.W_prime"), d_out, d_hid)
}

pub fn layer_norm(g: &mut Graph<'_>, x: NodeId, prefix: &str) -> Result<NodeId> {
    let gain = g.param(&format!("{prefix}.gain"))?;
    let bias = g.param(&format!("{prefix}.bias"))?;
    let y = g.normalize_rows(x)?;
    let y = g.mul_row(y, gain)?;
    g.add_row(y, bias)
}

fn init_layer_norm(init: &mut ParamInit, prefix: &str, d: usize) -> Result<()> {
    init.constant(&format!("{prefix}.gain"), vec![d], 1.0)?;
    init.constant(&format!("{prefix}.bias"), vec![d], 0.0)
}

/// Sinusoidal position table, `[n, d]` row-major.
pub fn sinusoidal_positions(n: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * d];
    for pos in 0..n {
        for i in 0..d {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / libm::pow(10_000.0, 2.0 * pair / d as f64);
            out[pos * d + i] = if i % 2 == 0 {
                libm::sin(angle)
            } else {
                libm::cos(angle)
            };
        }
    }
    out
}

/// Shape of one transformer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDims {
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
}

impl BlockDims {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || self.d_ff == 0 {
            return Err(Error::Config("transformer dims must be positive".into()));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }
}

pub fn init_block(init: &mut ParamInit, prefix: &str, dims: BlockDims) -> Result<()> {
    let d = dims.d_model;
    init_layer_norm(init, &format!("{prefix}.ln1"), d)?;
    for proj in ["W_q", "W_k", "W_v", "W_o"] {
        init.weight(&format!("{prefix}.attn.{proj}"), d, d)?;
    }
    init_layer_norm(init, &format!("{prefix}.ln2"), d)?;
    init_ffn(init, &format!("{prefix}.ffn"), d, dims.d_ff, d)
}

fn self_attention(g: &mut Graph<'_>, x: NodeId, prefix: &str, heads: usize) -> Result<NodeId> {
    let (_, d) = g.shape(x);
    let d_head = d / heads;
    let wq = g.param(&format!("{prefix}.W_q"))?;
    let wk = g.param(&format!("{prefix}.W_k"))?;
    let wv = g.param(&format!("{prefix}.W_v"))?;
    let wo = g.param(&format!("{prefix}.W_o"))?;
    let q = g.matmul_nt(x, wq)?;
    let k = g.matmul_nt(x, wk)?;
    let v = g.matmul_nt(x, wv)?;
    let scale = 1.0 / libm::sqrt(d_head as f64);
    let mut outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(q, h * d_head, d_head)?;
        let kh = g.slice_cols(k, h * d_head, d_head)?;
        let vh = g.slice_cols(v, h * d_head, d_head)?;
        let scores = g.matmul_nt(qh, kh)?;
        let scores = g.scale(scores, scale)?;
        let attn = g.softmax_rows(scores)?;
        outputs.push(g.matmul(attn, vh)?);
    }
    let merged = g.concat_cols(&outputs)?;
    g.matmul_nt(merged, wo)
}

/// Pre-norm block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
pub fn block(g: &mut Graph<'_>, x: NodeId, prefix: &str, heads: usize) -> Result<NodeId> {
    let h = layer_norm(g, x, &format!("{prefix}.ln1"))?;
    let h = self_attention(g, h, &format!("{prefix}.attn"), heads)?;
    let x = g.add(x, h)?;
    let h = layer_norm(g, x, &format!("{prefix}.ln2"))?;
    let h = ffn(g, h, &format!("{prefix}.ffn"))?;
    g.add(x, h)
}

/// Adds the sinusoidal table to `x`, runs `layers` blocks named
/// `{prefix}.layers.{i}` and a final `{prefix}.ln_final`.
pub fn transformer(
    g: &mut Graph<'_>,
    x: NodeId,
    prefix: &str,
    layers: usize,
    heads: usize,
) -> Result<NodeId> {
    let (n, d) = g.shape(x);
    let pos = g.input(n, d, sinusoidal_positions(n, d))?;
    let mut h = g.add(x, pos)?;
    for layer in 0..layers {
        h = block(g, h, &format!("{prefix}.layers.{layer}"), heads)?;
    }
    layer_norm(g, h, &format!("{prefix}.ln_final"))
}

pub fn init_transformer(init: &mut ParamInit, prefix: &str, layers: usize, dims: BlockDims) -> Result<()> {
    dims.validate()?;
    for layer in 0..layers {
        init_block(init, &format!("{prefix}.layers.{layer}"), dims)?;
    }
    init_layer_norm(init, &format!("{prefix}.ln_final"), dims.d_model)
}

/// Document encoder shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub vocab: usize,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn block_dims(&self) -> BlockDims {
        BlockDims {
            d_model: self.d_model,
            heads: self.heads,
            d_ff: 2 * self.d_model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.max_len == 0 {
            return Err(Error::Config("vocab and max_len must be positive".into()));
        }
        self.block_dims().validate()
    }
}

pub const ENCODER: &str = "encoder";

pub fn init_encoder(init: &mut ParamInit, config: &EncoderConfig) -> Result<()> {
    config.validate()?;
    init.uniform(
        &format!("{ENCODER}.embed"),
        vec![config.vocab, config.d_model],
        1.0,
    )?;
    init_transformer(init, ENCODER, config.layers, config.block_dims())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `[n_tokens, d_model]`
    pub hidden: Tensor,
}

/// Token embeddings plus sinusoidal positions through the encoder stack.
pub fn encode_graph(g: &mut Graph<'_>, tokens: &[usize], config: &EncoderConfig) -> Result<NodeId> {
    if tokens.len() > config.max_len {
        return Err(Error::Length {
            len: tokens.len(),
            max: config.max_len,
        });
    }
    if let Some(&id) = tokens.iter().find(|&&id| id >= config.vocab) {
        return Err(Error::Vocab {
            id,
            size: config.vocab,
        });
    }
    if tokens.is_empty() {
        return g.input(0, config.d_model, Vec::new());
    }
    let embed = g.param(&format!("{ENCODER}.embed"))?;
    let (vocab, d) = g.shape(embed);
    if vocab != config.vocab || d != config.d_model {
        return Err(Error::dim(
            "encode",
            format!("embedding is {vocab}x{d}, config says {}x{}", config.vocab, config.d_model),
        ));
    }
    let x = g.gather_rows(embed, tokens)?;
    transformer(g, x, ENCODER, config.layers, config.heads)
}

pub fn encode(tokens: &[usize], params: &ModelParams, config: &EncoderConfig) -> Result<EncoderOutput> {
    let mut g = Graph::new(params);
    let h = encode_graph(&mut g, tokens, config)?;
    Ok(EncoderOutput {
        hidden: g.to_tensor(h),
    })
}
