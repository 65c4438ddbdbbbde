//! Training targets derived from gold clusters only.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Document, Span};
use crate::extractor::candidate_end_range;

/// One incremental-clustering comparison: gold mention `mention` against the
/// already-processed members of one gold cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrCandidate {
    pub mention: usize,
    /// Indices into [`LabelSet::mentions`], in processing order.
    pub members: Vec<usize>,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSet {
    /// 1 where a gold mention starts, per token.
    pub start: Vec<f64>,
    /// Distinct gold start tokens, ascending.
    pub gold_starts: Vec<usize>,
    /// Candidate `(start, end)` spans for every gold start over its
    /// EOS-limited range, grouped by start.
    pub end_spans: Vec<Span>,
    pub end: Vec<f64>,
    /// Gold mentions sorted by `(start, end)`.
    pub mentions: Vec<Span>,
    /// Gold cluster index of each mention.
    pub cluster_of: Vec<usize>,
    /// Ordered pairs `(i, j)`, `j < i`, over `mentions`.
    pub ant_pairs: Vec<(usize, usize)>,
    pub ant: Vec<f64>,
    pub incr: Vec<IncrCandidate>,
}

impl LabelSet {
    pub fn from_document(doc: &Document) -> Self {
        let n = doc.len();
        let mut tagged: Vec<(Span, usize)> = doc
            .gold_clusters
            .iter()
            .enumerate()
            .flat_map(|(c, spans)| spans.iter().map(move |&s| (s, c)))
            .collect();
        tagged.sort_unstable();
        let mentions: Vec<Span> = tagged.iter().map(|&(s, _)| s).collect();
        let cluster_of: Vec<usize> = tagged.iter().map(|&(_, c)| c).collect();

        let mut start = vec![0.0; n];
        for m in &mentions {
            start[m.start] = 1.0;
        }
        let mut gold_starts: Vec<usize> = mentions.iter().map(|m| m.start).collect();
        gold_starts.dedup();

        let mut end_spans = Vec::new();
        let mut end = Vec::new();
        for &s in &gold_starts {
            for e in candidate_end_range(s, &doc.sentence_ends) {
                let span = Span::new(s, e);
                end.push(if mentions.binary_search(&span).is_ok() { 1.0 } else { 0.0 });
                end_spans.push(span);
            }
        }

        let mut ant_pairs = Vec::new();
        let mut ant = Vec::new();
        for i in 1..mentions.len() {
            for j in 0..i {
                ant_pairs.push((i, j));
                ant.push(if cluster_of[i] == cluster_of[j] { 1.0 } else { 0.0 });
            }
        }

        // Gold clusters in order of creation, each holding processed members.
        let mut open: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut incr = Vec::new();
        for (i, &c) in cluster_of.iter().enumerate() {
            for (gold, members) in &open {
                incr.push(IncrCandidate {
                    mention: i,
                    members: members.clone(),
                    label: if *gold == c { 1.0 } else { 0.0 },
                });
            }
            match open.iter_mut().find(|(gold, _)| *gold == c) {
                Some((_, members)) => members.push(i),
                None => open.push((c, vec![i])),
            }
        }

        LabelSet {
            start,
            gold_starts,
            end_spans,
            end,
            mentions,
            cluster_of,
            ant_pairs,
            ant,
            incr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn doc() -> Document {
        Document {
            doc_id: "x".into(),
            tokens: ["a", "b", "c", ".", "d", "e", "."].iter().map(|t| t.to_string()).collect(),
            sentence_ends: vec![3, 6],
            speakers: None,
            gold_clusters: vec![
                vec![Span::new(0, 1), Span::new(4, 4)],
                vec![Span::new(0, 0), Span::new(5, 5)],
                vec![Span::new(2, 2)],
            ],
        }
    }

    #[test]
    fn labels_follow_gold() {
        let l = LabelSet::from_document(&doc());
        assert_eq!(l.start, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(l.gold_starts, vec![0, 2, 4, 5]);
        assert_eq!(l.end_spans.len(), 4 + 2 + 3 + 2);
        assert_eq!(&l.end[..4], &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(
            l.mentions,
            vec![Span::new(0, 0), Span::new(0, 1), Span::new(2, 2), Span::new(4, 4), Span::new(5, 5)]
        );
        assert_eq!(l.cluster_of, vec![1, 0, 2, 0, 1]);
        assert_eq!(l.ant_pairs.len(), 10);
        assert_eq!(l.ant.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn incremental_candidates_use_gold_prefixes() {
        let l = LabelSet::from_document(&doc());
        // mention 0 opens gold 1; mention 1 sees {0}; mention 2 sees {0},{1};
        // mention 3 sees three clusters; mention 4 sees three clusters.
        assert_eq!(l.incr.len(), 1 + 2 + 3 + 3);
        assert_eq!(l.incr[0], IncrCandidate { mention: 1, members: vec![0], label: 0.0 });
        let last: Vec<_> = l.incr.iter().filter(|c| c.mention == 4).collect();
        assert_eq!(last[0].members, vec![0]);
        assert_eq!(last[0].label, 1.0);
        assert_eq!(last[1].members, vec![1, 3]);
        assert_eq!(last[1].label, 0.0);
    }

    #[test]
    fn first_mention_has_no_candidates() {
        let mut d = doc();
        d.gold_clusters = vec![vec![Span::new(0, 0)]];
        assert!(LabelSet::from_document(&d).incr.is_empty());
    }
}
