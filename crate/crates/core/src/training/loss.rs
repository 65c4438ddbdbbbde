//! Binary cross-entropy terms of the multitask objective.

use crate::error::{Error, Result};
use crate::graph::PROB_EPS;

/// `Σ −(y·ln p + (1−y)·ln(1−p))`, `p` clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce_sum(probs: &[f64], labels: &[f64]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
        })
        .sum()
}

fn checked(probs: &[f64], labels: &[f64]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::LabelLength {
            predictions: probs.len(),
            labels: labels.len(),
        });
    }
    Ok(bce_sum(probs, labels))
}

/// Start loss over every token of the sequence.
pub fn loss_start(p_start: &[f64], labels: &[f64]) -> Result<f64> {
    checked(p_start, labels)
}

/// End loss summed over gold starts, each with its own candidate ends.
pub fn loss_end(p_end: &[&[f64]], labels: &[&[f64]]) -> Result<f64> {
    if p_end.len() != labels.len() {
        return Err(Error::LabelLength {
            predictions: p_end.len(),
            labels: labels.len(),
        });
    }
    p_end.iter().zip(labels).map(|(p, y)| checked(p, y)).sum()
}

/// Mention-antecedent clustering loss over ordered gold pairs `j < i`.
pub fn loss_clust_ant(pair_probs: &[f64], labels: &[f64]) -> Result<f64> {
    checked(pair_probs, labels)
}

/// Incremental clustering loss over every `(mention, existing gold cluster)`.
pub fn loss_clust_incr(cluster_probs: &[f64], labels: &[f64]) -> Result<f64> {
    checked(cluster_probs, labels)
}

/// Per-term losses; `total` is the plain sum of the three.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub start: f64,
    pub end: f64,
    pub clust: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(start: f64, end: f64, clust: f64) -> Self {
        LossBreakdown {
            start,
            end,
            clust,
            total: start + end + clust,
        }
    }

    pub fn add(&mut self, other: &LossBreakdown) {
        self.start += other.start;
        self.end += other.end;
        self.clust += other.clust;
        self.total += other.total;
    }
}
