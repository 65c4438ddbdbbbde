//! MUC, B³, CEAFφ4, their CoNLL average and mention F1.
//!
//! Every metric is computed from per-document numerator/denominator counts
//! so a corpus score is the ratio of summed counts, not a mean of
//! per-document scores. Empty denominators give 0.

pub mod assignment;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::corpus::{filter_singletons, Cluster, Document, Span};
use crate::error::Result;

pub use assignment::max_weight_assignment;

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Summable numerators and denominators behind one [`Prf`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Counts {
    pub p_num: f64,
    pub p_den: f64,
    pub r_num: f64,
    pub r_den: f64,
}

impl Counts {
    pub fn add(&mut self, other: &Counts) {
        self.p_num += other.p_num;
        self.p_den += other.p_den;
        self.r_num += other.r_num;
        self.r_den += other.r_den;
    }

    pub fn prf(&self) -> Prf {
        Prf::new(ratio(self.p_num, self.p_den), ratio(self.r_num, self.r_den))
    }
}

fn membership(clusters: &[Cluster]) -> BTreeMap<Span, usize> {
    clusters
        .iter()
        .enumerate()
        .flat_map(|(c, spans)| spans.iter().map(move |&s| (s, c)))
        .collect()
}

/// `Σ_S (|S| − |partition of S by other|)` and `Σ_S (|S| − 1)`.
fn muc_side(key: &[Cluster], other: &[Cluster]) -> (f64, f64) {
    let map = membership(other);
    let (mut num, mut den) = (0usize, 0usize);
    for cluster in key.iter().filter(|c| !c.is_empty()) {
        let mut parts = BTreeSet::new();
        let mut unmatched = 0;
        for s in cluster {
            match map.get(s) {
                Some(&c) => {
                    parts.insert(c);
                }
                None => unmatched += 1,
            }
        }
        num += cluster.len() - (parts.len() + unmatched);
        den += cluster.len() - 1;
    }
    (num as f64, den as f64)
}

pub fn muc_counts(gold: &[Cluster], pred: &[Cluster]) -> Counts {
    let (r_num, r_den) = muc_side(gold, pred);
    let (p_num, p_den) = muc_side(pred, gold);
    Counts { p_num, p_den, r_num, r_den }
}

/// Σ over mentions of `|K ∩ O(m)| / |K|`, and the number of mentions.
fn b3_side(key: &[Cluster], other: &[Cluster]) -> (f64, f64) {
    let map = membership(other);
    let other_sets: Vec<BTreeSet<Span>> = other.iter().map(|c| c.iter().copied().collect()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for cluster in key {
        for s in cluster {
            den += 1.0;
            if let Some(&c) = map.get(s) {
                let overlap = cluster.iter().filter(|t| other_sets[c].contains(t)).count();
                num += overlap as f64 / cluster.len() as f64;
            }
        }
    }
    (num, den)
}

pub fn b3_counts(gold: &[Cluster], pred: &[Cluster]) -> Counts {
    let (r_num, r_den) = b3_side(gold, pred);
    let (p_num, p_den) = b3_side(pred, gold);
    Counts { p_num, p_den, r_num, r_den }
}

/// `φ4(K, R) = 2|K ∩ R| / (|K| + |R|)`.
pub fn phi4(key: &[Span], response: &[Span]) -> f64 {
    if key.is_empty() && response.is_empty() {
        return 0.0;
    }
    let set: BTreeSet<&Span> = key.iter().collect();
    let common = response.iter().filter(|s| set.contains(s)).count();
    2.0 * common as f64 / (key.len() + response.len()) as f64
}

/// Best total φ4 over one-to-one alignments of gold to predicted clusters.
pub fn ceaf_alignment(gold: &[Cluster], pred: &[Cluster]) -> f64 {
    let weights: Vec<f64> = gold
        .iter()
        .flat_map(|g| pred.iter().map(move |p| phi4(g, p)))
        .collect();
    max_weight_assignment(&weights, gold.len(), pred.len()).0
}

pub fn ceaf_counts(gold: &[Cluster], pred: &[Cluster]) -> Counts {
    let total = ceaf_alignment(gold, pred);
    Counts {
        p_num: total,
        p_den: pred.len() as f64,
        r_num: total,
        r_den: gold.len() as f64,
    }
}

pub fn mention_counts(gold: &[Span], pred: &[Span]) -> Counts {
    let gold: BTreeSet<&Span> = gold.iter().collect();
    let pred: BTreeSet<&Span> = pred.iter().collect();
    let common = gold.intersection(&pred).count() as f64;
    Counts {
        p_num: common,
        p_den: pred.len() as f64,
        r_num: common,
        r_den: gold.len() as f64,
    }
}

pub fn muc(gold: &[Cluster], pred: &[Cluster]) -> Prf {
    muc_counts(gold, pred).prf()
}

pub fn b_cubed(gold: &[Cluster], pred: &[Cluster]) -> Prf {
    b3_counts(gold, pred).prf()
}

pub fn ceaf_phi4(gold: &[Cluster], pred: &[Cluster]) -> Prf {
    ceaf_counts(gold, pred).prf()
}

pub fn mention_f1(gold: &[Span], pred: &[Span]) -> Prf {
    mention_counts(gold, pred).prf()
}

pub fn conll_avg(muc_f1: f64, b3_f1: f64, ceaf_f1: f64) -> f64 {
    (muc_f1 + b3_f1 + ceaf_f1) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub muc: Prf,
    pub b3: Prf,
    pub ceaf_phi4: Prf,
    pub conll_f1: f64,
    pub mention: Prf,
}

/// Corpus-level accumulator over `(gold, predicted)` document pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorpusScorer {
    pub muc: Counts,
    pub b3: Counts,
    pub ceaf: Counts,
    pub mention: Counts,
}

impl CorpusScorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, gold: &[Cluster], pred: &[Cluster]) {
        let spans = |c: &[Cluster]| -> Vec<Span> { c.iter().flatten().copied().collect() };
        self.muc.add(&muc_counts(gold, pred));
        self.b3.add(&b3_counts(gold, pred));
        self.ceaf.add(&ceaf_counts(gold, pred));
        self.mention.add(&mention_counts(&spans(gold), &spans(pred)));
    }

    pub fn report(&self) -> MetricReport {
        let (muc, b3, ceaf_phi4) = (self.muc.prf(), self.b3.prf(), self.ceaf.prf());
        MetricReport {
            muc,
            b3,
            ceaf_phi4,
            conll_f1: conll_avg(muc.f1, b3.f1, ceaf_phi4.f1),
            mention: self.mention.prf(),
        }
    }
}

pub fn evaluate_corpus<'a>(docs: impl IntoIterator<Item = (&'a [Cluster], &'a [Cluster])>) -> MetricReport {
    let mut scorer = CorpusScorer::new();
    for (gold, pred) in docs {
        scorer.add_document(gold, pred);
    }
    scorer.report()
}

/// Assigns clusters to a fixed mention list.
pub trait MentionClusterer {
    /// `mentions` are the document's gold spans sorted by `(start, end)`;
    /// returned clusters must use only those spans.
    fn cluster(&self, doc: &Document, mentions: &[Span]) -> Result<Vec<Cluster>>;
}

/// Scores clustering alone by handing each clusterer the gold mentions.
/// Singleton clusters are dropped on both sides unless `keep_singletons`.
pub fn evaluate_gold_mentions<C: MentionClusterer + ?Sized>(
    docs: &[Document],
    clusterer: &C,
    keep_singletons: bool,
) -> Result<MetricReport> {
    let policy = |c: Vec<Cluster>| if keep_singletons { c } else { filter_singletons(&c) };
    let mut scorer = CorpusScorer::new();
    for doc in docs {
        let pred = policy(clusterer.cluster(doc, &doc.gold_mentions())?);
        let gold = policy(doc.gold_clusters.clone());
        scorer.add_document(&gold, &pred);
    }
    Ok(scorer.report())
}
