//! Start/end mention extraction.
//!
//! Every token gets a start probability from a feed-forward head. Tokens
//! above the threshold are scored for ends, but only up to the end of their
//! own sentence; the end head sees the start and end hidden states
//! concatenated.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::corpus::Span;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::nn::{self, EncoderOutput};
use crate::tensor::{ModelParams, ParamInit};

pub const START_HEAD: &str = "extractor.start";
pub const END_HEAD: &str = "extractor.end";

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MentionCandidate {
    pub span: Span,
    pub p_start: f64,
    pub p_end: f64,
}

pub fn init_extractor(init: &mut ParamInit, d_model: usize, d_hid: usize) -> Result<()> {
    nn::init_ffn(init, START_HEAD, d_model, d_hid, 1)?;
    nn::init_ffn(init, END_HEAD, 2 * d_model, d_hid, 1)
}

/// Candidate ends for `start`: from `start` to the nearest sentence end at or
/// after it.
pub fn candidate_end_range(start: usize, sentence_ends: &[usize]) -> RangeInclusive<usize> {
    let idx = sentence_ends.partition_point(|&e| e < start);
    let end = sentence_ends.get(idx).copied().unwrap_or(start);
    start..=end
}

/// `σ(F_start(x_i))` for every row of `hidden`, as an `[n, 1]` node.
pub fn start_probs(g: &mut Graph<'_>, hidden: NodeId) -> Result<NodeId> {
    let logits = nn::ffn(g, hidden, START_HEAD)?;
    g.sigmoid(logits)
}

/// End probabilities for each start over its EOS-limited range. Returns the
/// `[k, 1]` probability node and the `k` spans it scores, grouped by start
/// in the order given.
pub fn end_probs(
    g: &mut Graph<'_>,
    hidden: NodeId,
    starts: &[usize],
    sentence_ends: &[usize],
) -> Result<(NodeId, Vec<Span>)> {
    let mut spans = Vec::new();
    for &s in starts {
        spans.extend(candidate_end_range(s, sentence_ends).map(|e| Span::new(s, e)));
    }
    let start_rows: Vec<usize> = spans.iter().map(|s| s.start).collect();
    let end_rows: Vec<usize> = spans.iter().map(|s| s.end).collect();
    let xs = g.gather_rows(hidden, &start_rows)?;
    let xe = g.gather_rows(hidden, &end_rows)?;
    let pair = g.concat_cols(&[xs, xe])?;
    let logits = nn::ffn(g, pair, END_HEAD)?;
    Ok((g.sigmoid(logits)?, spans))
}

pub fn score_starts(hidden: &EncoderOutput, params: &ModelParams) -> Result<Vec<f64>> {
    let mut g = Graph::new(params);
    let h = g.input_tensor(&hidden.hidden)?;
    if g.shape(h).0 == 0 {
        return Ok(Vec::new());
    }
    let p = start_probs(&mut g, h)?;
    Ok(g.value(p).to_vec())
}

/// One probability per token of `candidate_end_range(start, ..)`.
pub fn score_ends(
    hidden: &EncoderOutput,
    start: usize,
    sentence_ends: &[usize],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let mut g = Graph::new(params);
    let h = g.input_tensor(&hidden.hidden)?;
    let (p, _) = end_probs(&mut g, h, &[start], sentence_ends)?;
    Ok(g.value(p).to_vec())
}

/// Which tokens get their ends scored.
#[derive(Debug, Clone, Copy)]
pub enum StartSelection<'a> {
    /// Tokens whose start probability exceeds the threshold.
    Predicted,
    /// Teacher forcing: the given start indices, regardless of probability.
    Gold(&'a [usize]),
}

/// Runs both heads on an existing graph. `allowed(t)` vetoes starts (used to
/// keep speaker-prefix tokens out of mentions). Output sorted by
/// `(start, end)`; comparisons are strict.
pub fn extract_on_graph(
    g: &mut Graph<'_>,
    hidden: NodeId,
    sentence_ends: &[usize],
    threshold: f64,
    selection: StartSelection<'_>,
    allowed: impl Fn(usize) -> bool,
) -> Result<Vec<MentionCandidate>> {
    let n = g.shape(hidden).0;
    if n == 0 {
        return Ok(Vec::new());
    }
    let p_start_node = start_probs(g, hidden)?;
    let p_start = g.value(p_start_node).to_vec();
    let mut starts: Vec<usize> = match selection {
        StartSelection::Predicted => (0..n).filter(|&t| p_start[t] > threshold).collect(),
        StartSelection::Gold(gold) => gold.to_vec(),
    };
    starts.retain(|&t| allowed(t));
    starts.sort_unstable();
    starts.dedup();
    if starts.is_empty() {
        return Ok(Vec::new());
    }
    let (p_end_node, spans) = end_probs(g, hidden, &starts, sentence_ends)?;
    let p_end = g.value(p_end_node);
    Ok(spans
        .iter()
        .zip(p_end)
        .filter(|(_, &p)| p > threshold)
        .map(|(&span, &p)| MentionCandidate {
            span,
            p_start: p_start[span.start],
            p_end: p,
        })
        .collect())
}

pub fn extract_mentions(
    sentence_ends: &[usize],
    hidden: &EncoderOutput,
    params: &ModelParams,
    threshold: f64,
    selection: StartSelection<'_>,
) -> Result<Vec<MentionCandidate>> {
    let mut g = Graph::new(params);
    let h = g.input_tensor(&hidden.hidden)?;
    extract_on_graph(&mut g, h, sentence_ends, threshold, selection, |_| true)
}

/// Candidate and pair counts for the classic enumerate-and-prune pipeline
/// next to the start/end pipeline on one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineStats {
    pub n_enumeration: u64,
    pub n_span_len_capped: u64,
    pub n_start_end: u64,
    pub n_eos_regularized: u64,
    pub n_pairs_topk: u64,
    pub n_pairs_pred_only: u64,
}

impl PipelineStats {
    pub fn add(&mut self, other: &PipelineStats) {
        self.n_enumeration += other.n_enumeration;
        self.n_span_len_capped += other.n_span_len_capped;
        self.n_start_end += other.n_start_end;
        self.n_eos_regularized += other.n_eos_regularized;
        self.n_pairs_topk += other.n_pairs_topk;
        self.n_pairs_pred_only += other.n_pairs_pred_only;
    }
}

fn pairs(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// `predicted_starts` are distinct token indices; `n_mentions` is `|M|`.
pub fn pipeline_stats(
    n_tokens: usize,
    sentence_ends: &[usize],
    predicted_starts: &[usize],
    n_mentions: usize,
    span_len_cap: usize,
    top_k_ratio: f64,
) -> PipelineStats {
    let n = n_tokens as u64;
    let cap = span_len_cap as u64;
    let top_k = libm::ceil(top_k_ratio * n as f64 - 1e-9).max(0.0) as u64;
    PipelineStats {
        n_enumeration: n * (n + 1) / 2,
        n_span_len_capped: (0..n).map(|i| cap.min(n - i)).sum(),
        n_start_end: predicted_starts.iter().map(|&s| n - s as u64).sum(),
        n_eos_regularized: predicted_starts
            .iter()
            .map(|&s| candidate_end_range(s, sentence_ends).count() as u64)
            .sum(),
        n_pairs_topk: pairs(top_k.min(n)),
        n_pairs_pred_only: pairs(n_mentions as u64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use alloc::vec;

    fn zero_params(d: usize, d_hid: usize) -> ModelParams {
        let mut init = ParamInit::new(0);
        init_extractor(&mut init, d, d_hid).unwrap();
        let mut p = init.finish();
        p.zero_all();
        p
    }

    fn hidden(rows: usize, cols: usize, data: Vec<f32>) -> EncoderOutput {
        EncoderOutput {
            hidden: Tensor::matrix(rows, cols, data).unwrap(),
        }
    }

    #[test]
    fn end_range_examples() {
        let ends = [3, 7];
        assert_eq!(candidate_end_range(1, &ends), 1..=3);
        assert_eq!(candidate_end_range(4, &ends), 4..=7);
        assert_eq!(candidate_end_range(3, &ends), 3..=3);
    }

    #[test]
    fn zero_params_give_half_and_no_mentions() {
        let params = zero_params(2, 3);
        let h = hidden(3, 2, vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.0]);
        let p = score_starts(&h, &params).unwrap();
        assert_eq!(p, vec![0.5; 3]);
        assert_eq!(score_ends(&h, 0, &[2], &params).unwrap(), vec![0.5; 3]);
        assert_eq!(score_ends(&h, 2, &[2], &params).unwrap().len(), 1);
        let m = extract_mentions(&[2], &h, &params, 0.5, StartSelection::Predicted).unwrap();
        assert!(m.is_empty());
        assert!(score_starts(&hidden(0, 2, vec![]), &params).unwrap().is_empty());
    }

    /// 1-dim hidden states with 1x1 weights: p = σ(w' · GeLU(w · x)).
    #[test]
    fn start_scores_match_scalar_oracle() {
        let mut params = zero_params(1, 1);
        params.get_mut("extractor.start.W").unwrap().data_mut()[0] = 1.5;
        params.get_mut("extractor.start.W_prime").unwrap().data_mut()[0] = -2.0;
        let xs = [0.5f32, -1.0, 2.0];
        let h = hidden(3, 1, xs.to_vec());
        let p = score_starts(&h, &params).unwrap();
        for (x, got) in xs.iter().zip(p) {
            let pre = 1.5 * f64::from(*x);
            let gelu = 0.5 * pre * (1.0 + libm::erf(pre / core::f64::consts::SQRT_2));
            let want = 1.0 / (1.0 + libm::exp(2.0 * gelu));
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn end_scores_match_scalar_oracle() {
        let mut params = zero_params(1, 1);
        let w = params.get_mut("extractor.end.W").unwrap();
        w.data_mut().copy_from_slice(&[0.5, 1.0]);
        params.get_mut("extractor.end.W_prime").unwrap().data_mut()[0] = 3.0;
        let h = hidden(2, 1, vec![0.4, -0.8]);
        let p = score_ends(&h, 0, &[1], &params).unwrap();
        for (j, got) in p.iter().enumerate() {
            let pre = 0.5 * 0.4 + 1.0 * [0.4, -0.8][j];
            let gelu = 0.5 * pre * (1.0 + libm::erf(pre / core::f64::consts::SQRT_2));
            let want = 1.0 / (1.0 + libm::exp(-3.0 * gelu));
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn one_start_two_ends_gives_overlapping_candidates() {
        // Start head fires on positive x; end head fires on positive x_j.
        let mut params = zero_params(1, 1);
        params.get_mut("extractor.start.W").unwrap().data_mut()[0] = 4.0;
        params.get_mut("extractor.start.W_prime").unwrap().data_mut()[0] = 4.0;
        params.get_mut("extractor.end.W").unwrap().data_mut().copy_from_slice(&[0.0, 4.0]);
        params.get_mut("extractor.end.W_prime").unwrap().data_mut()[0] = 4.0;
        let h = hidden(4, 1, vec![1.0, -1.0, 1.0, -1.0]);
        let m = extract_mentions(&[3], &h, &params, 0.5, StartSelection::Predicted).unwrap();
        let spans: Vec<Span> = m.iter().map(|c| c.span).collect();
        assert_eq!(spans, vec![Span::new(0, 0), Span::new(0, 2), Span::new(2, 2)]);
        assert!(m.iter().all(|c| c.p_start > 0.5 && c.p_end > 0.5));

        // Gold starts ignore the start head entirely.
        let m = extract_mentions(&[3], &h, &params, 0.5, StartSelection::Gold(&[1])).unwrap();
        assert_eq!(m.iter().map(|c| c.span).collect::<Vec<_>>(), vec![Span::new(1, 2)]);
    }

    #[test]
    fn stats_formulas() {
        let s = pipeline_stats(10, &[9], &[], 0, 30, 0.4);
        assert_eq!(s.n_enumeration, 55);
        assert_eq!(s.n_span_len_capped, 55);
        assert_eq!(pipeline_stats(10, &[9], &[], 0, 3, 0.4).n_span_len_capped, 27);
        let s = pipeline_stats(10, &[4, 9], &[0, 5], 3, 30, 0.4);
        assert_eq!(s.n_eos_regularized, 10);
        assert_eq!(s.n_start_end, 10 + 5);
        assert_eq!(s.n_pairs_topk, 6);
        assert_eq!(s.n_pairs_pred_only, 3);
    }
}
