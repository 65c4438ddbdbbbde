//! Incremental clustering: mentions are visited in order and either join the
//! most probable existing cluster or open a new one. A one-layer transformer
//! reads `[CLS, h_i, h_f, ..., h_g]` and its CLS output scores the fit of
//! mention `i` to the cluster whose members are `f..g`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Span;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::nn::{self, BlockDims};
use crate::tensor::{ModelParams, ParamInit};

pub const INCR: &str = "incr";

fn block_dims(d_pair: usize, heads: usize) -> BlockDims {
    BlockDims {
        d_model: d_pair,
        heads,
        d_ff: 2 * d_pair,
    }
}

pub fn init_incremental(init: &mut ParamInit, d_model: usize, d_hid: usize, d_pair: usize, heads: usize) -> Result<()> {
    nn::init_ffn(init, &format!("{INCR}.mention"), 2 * d_model, d_hid, d_pair)?;
    init.uniform(&format!("{INCR}.cls"), vec![1, d_pair], 1.0)?;
    nn::init_transformer(init, &format!("{INCR}.T"), 1, block_dims(d_pair, heads))?;
    init.weight(&format!("{INCR}.W_c"), 1, d_pair)
}

/// `h = F([x_start, x_end])` for every mention, `[M, d_pair]`.
pub fn mention_reprs(g: &mut Graph<'_>, hidden: NodeId, mentions: &[Span]) -> Result<NodeId> {
    let start_rows: Vec<usize> = mentions.iter().map(|m| m.start).collect();
    let end_rows: Vec<usize> = mentions.iter().map(|m| m.end).collect();
    let xs = g.gather_rows(hidden, &start_rows)?;
    let xe = g.gather_rows(hidden, &end_rows)?;
    let x = g.concat_cols(&[xs, xe])?;
    nn::ffn(g, x, &format!("{INCR}.mention"))
}

/// Standalone [`mention_repr`](mention_reprs) for a single span.
pub fn mention_repr(hidden: &crate::tensor::Tensor, span: Span, params: &ModelParams) -> Result<Vec<f64>> {
    let mut g = Graph::new(params);
    let h = g.input_tensor(hidden)?;
    let r = mention_reprs(&mut g, h, &[span])?;
    Ok(g.value(r).to_vec())
}

/// Logit `S(m_i, c) = W_c · ReLU(T_CLS(h_i, members...))`, `[1, 1]`.
/// `mention` is `[1, d]`, `members` is `[k, d]` with `k ≥ 1`.
pub fn cluster_logit(g: &mut Graph<'_>, mention: NodeId, members: NodeId, heads: usize) -> Result<NodeId> {
    if g.shape(members).0 == 0 {
        return Err(Error::dim("cluster_logit", "cluster has no members"));
    }
    let cls = g.param(&format!("{INCR}.cls"))?;
    let seq = g.concat_rows(&[cls, mention, members])?;
    let out = nn::transformer(g, seq, &format!("{INCR}.T"), 1, heads)?;
    let first = g.gather_rows(out, &[0])?;
    let act = g.relu(first)?;
    let w_c = g.param(&format!("{INCR}.W_c"))?;
    g.matmul_nt(act, w_c)
}

/// `σ(S(m_i, c))` from plain vectors.
pub fn incr_cluster_score(h_i: &[f64], cluster: &[&[f64]], params: &ModelParams, heads: usize) -> Result<f64> {
    let d = h_i.len();
    if cluster.is_empty() {
        return Err(Error::dim("incr_cluster_score", "cluster has no members"));
    }
    if let Some(bad) = cluster.iter().find(|m| m.len() != d) {
        return Err(Error::dim(
            "incr_cluster_score",
            format!("member of width {} next to mention of width {d}", bad.len()),
        ));
    }
    let mut g = Graph::new(params);
    let mention = g.input(1, d, h_i.to_vec())?;
    let members = g.input(cluster.len(), d, cluster.iter().flat_map(|m| m.iter().copied()).collect())?;
    let logit = cluster_logit(&mut g, mention, members, heads)?;
    Ok(nn::sigmoid(g.scalar(logit)))
}

/// Clusters built so far. `reprs[k]` is the retained representation of the
/// `k`-th processed mention.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterState {
    pub clusters: Vec<Vec<usize>>,
    pub reprs: Vec<Vec<f64>>,
}

impl ClusterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_mentions(&self) -> usize {
        self.reprs.len()
    }
}

/// Probability that a mention belongs to one existing cluster.
pub trait ClusterScorer {
    fn cluster_prob(&self, mention: &[f64], cluster_index: usize, members: &[&[f64]]) -> Result<f64>;
}

/// The trained transformer scorer.
#[derive(Debug, Clone, Copy)]
pub struct TransformerScorer<'p> {
    pub params: &'p ModelParams,
    pub heads: usize,
}

impl ClusterScorer for TransformerScorer<'_> {
    fn cluster_prob(&self, mention: &[f64], _cluster_index: usize, members: &[&[f64]]) -> Result<f64> {
        incr_cluster_score(mention, members, self.params, self.heads)
    }
}

impl<F> ClusterScorer for F
where
    F: Fn(&[f64], usize, &[&[f64]]) -> f64,
{
    fn cluster_prob(&self, mention: &[f64], cluster_index: usize, members: &[&[f64]]) -> Result<f64> {
        Ok(self(mention, cluster_index, members))
    }
}

/// Processes mention `index` (which must be the next one in order). The
/// mention joins the argmax cluster when its probability exceeds
/// `threshold`, ties going to the earliest-created cluster; otherwise it
/// opens a new singleton cluster.
pub fn incr_assign<S: ClusterScorer + ?Sized>(
    index: usize,
    h_i: Vec<f64>,
    mut state: ClusterState,
    scorer: &S,
    threshold: f64,
) -> Result<ClusterState> {
    if index != state.num_mentions() {
        return Err(Error::Config(format!(
            "mention {index} processed out of order (expected {})",
            state.num_mentions()
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for (c, cluster) in state.clusters.iter().enumerate() {
        let members: Vec<&[f64]> = cluster.iter().map(|&m| state.reprs[m].as_slice()).collect();
        let p = scorer.cluster_prob(&h_i, c, &members)?;
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((c, p));
        }
    }
    state.reprs.push(h_i);
    match best {
        Some((c, p)) if p > threshold => state.clusters[c].push(index),
        _ => state.clusters.push(vec![index]),
    }
    Ok(state)
}

/// Runs [`incr_assign`] over all mentions in order.
pub fn incr_cluster_all<S: ClusterScorer + ?Sized>(
    reprs: Vec<Vec<f64>>,
    scorer: &S,
    threshold: f64,
) -> Result<ClusterState> {
    let mut state = ClusterState::new();
    for (i, h) in reprs.into_iter().enumerate() {
        state = incr_assign(i, h, state, scorer, threshold)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn params(d_pair: usize) -> ModelParams {
        let mut init = ParamInit::new(17);
        init_incremental(&mut init, 2, 3, d_pair, 2).unwrap();
        init.finish()
    }

    #[test]
    fn first_mention_opens_cluster() {
        let never = |_: &[f64], _: usize, _: &[&[f64]]| -> f64 { panic!("no clusters to score") };
        let state = incr_assign(0, vec![1.0], ClusterState::new(), &never, 0.5).unwrap();
        assert_eq!(state.clusters, vec![vec![0]]);
    }

    #[test]
    fn argmax_and_threshold() {
        let scores = [0.9, 0.3];
        let stub = |_: &[f64], c: usize, _: &[&[f64]]| scores[c];
        let state = ClusterState {
            clusters: vec![vec![0], vec![1]],
            reprs: vec![vec![0.0], vec![0.0]],
        };
        let joined = incr_assign(2, vec![0.0], state.clone(), &stub, 0.5).unwrap();
        assert_eq!(joined.clusters, vec![vec![0, 2], vec![1]]);

        let low = |_: &[f64], _: usize, _: &[&[f64]]| 0.3;
        let alone = incr_assign(2, vec![0.0], state.clone(), &low, 0.5).unwrap();
        assert_eq!(alone.clusters, vec![vec![0], vec![1], vec![2]]);

        assert!(incr_assign(5, vec![0.0], state, &low, 0.5).is_err());
    }

    #[test]
    fn zero_output_weight_gives_half() {
        let mut p = params(4);
        p.get_mut("incr.W_c").unwrap().data_mut().fill(0.0);
        let score = incr_cluster_score(&[0.1, 0.2, 0.3, 0.4], &[&[1.0, 0.0, 0.0, 0.0]], &p, 2).unwrap();
        assert_eq!(score, 0.5);
    }

    #[test]
    fn member_order_changes_score() {
        let p = params(4);
        let a = [0.5, -0.3, 0.8, 0.1];
        let b = [-0.7, 0.2, 0.4, -0.9];
        let h = [0.3, 0.3, -0.2, 0.6];
        let ab = incr_cluster_score(&h, &[&a, &b], &p, 2).unwrap();
        let ba = incr_cluster_score(&h, &[&b, &a], &p, 2).unwrap();
        assert_ne!(ab, ba);
        // Deterministic
        assert_eq!(ab, incr_cluster_score(&h, &[&a, &b], &p, 2).unwrap());
        assert!(incr_cluster_score(&h, &[], &p, 2).is_err());
    }

    #[test]
    fn singleton_cluster_sequence_has_three_rows() {
        let p = params(4);
        let mut g = Graph::new(&p);
        let m = g.input(1, 4, vec![0.0; 4]).unwrap();
        let members = g.input(1, 4, vec![0.0; 4]).unwrap();
        let cls = g.param("incr.cls").unwrap();
        let seq = g.concat_rows(&[cls, m, members]).unwrap();
        assert_eq!(g.shape(seq), (3, 4));
    }

    #[test]
    fn mention_repr_of_single_token_span() {
        let mut p = params(4);
        let hidden = Tensor::matrix(2, 2, vec![0.5, -0.5, 1.0, 2.0]).unwrap();
        let r = mention_repr(&hidden, Span::new(1, 1), &p).unwrap();
        let manual = nn::ffn_project(
            &[1.0, 2.0, 1.0, 2.0],
            p.get("incr.mention.W").unwrap(),
            p.get("incr.mention.W_prime").unwrap(),
        )
        .unwrap();
        for (a, b) in r.iter().zip(manual) {
            assert!((*a - f64::from(b)).abs() < 1e-6);
        }
        p.get_mut("incr.mention.W").unwrap().data_mut().fill(0.0);
        assert_eq!(mention_repr(&hidden, Span::new(0, 1), &p).unwrap(), vec![0.0; 4]);
    }
}
