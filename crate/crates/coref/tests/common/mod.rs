#![allow(dead_code)]

use coref_core::corpus::{Cluster, Document, Span};
use proptest::prelude::*;

fn crossing(a: Span, b: Span) -> bool {
    let (x, y) = if a.start <= b.start { (a, b) } else { (b, a) };
    x.start < y.start && y.start < x.end && x.end < y.end
}

/// Random valid documents whose clusters can be bracketed: spans sorted
/// within a cluster, no duplicates, no crossing same-cluster pair.
pub fn document() -> impl Strategy<Value = Document> {
    let sentences = prop::collection::vec(prop::collection::vec("[a-z]{1,5}", 1..7), 1..5);
    (sentences, any::<bool>(), "[A-Z][a-z]{0,4}", any::<u64>()).prop_flat_map(|(sents, with_spk, spk, id)| {
        let mut tokens = Vec::new();
        let mut ends = Vec::new();
        let mut bounds = Vec::new();
        for s in &sents {
            let start = tokens.len();
            tokens.extend(s.iter().cloned());
            ends.push(tokens.len() - 1);
            bounds.push((start, tokens.len() - 1));
        }
        let speakers = with_spk.then(|| (0..sents.len()).map(|i| format!("{spk}{}", i % 2)).collect());
        let span = prop::sample::select(bounds).prop_flat_map(|(s, e)| {
            (s..=e).prop_flat_map(move |a| (Just(a), a..=e)).prop_map(|(a, b)| Span::new(a, b))
        });
        let assigned = prop::collection::vec((span, 0usize..4), 0..10);
        assigned.prop_map(move |pairs| {
            let mut clusters: Vec<Cluster> = vec![Vec::new(); 4];
            let mut seen = Vec::new();
            for (sp, c) in pairs {
                if seen.contains(&sp) || clusters[c].iter().any(|&o| crossing(o, sp)) {
                    continue;
                }
                seen.push(sp);
                clusters[c].push(sp);
            }
            clusters.retain(|c| !c.is_empty());
            for c in &mut clusters {
                c.sort_unstable();
            }
            let doc = Document {
                doc_id: format!("doc_{id:x}"),
                tokens: tokens.clone(),
                sentence_ends: ends.clone(),
                speakers: speakers.clone(),
                gold_clusters: clusters,
            };
            doc.validate().expect("generated document is valid");
            doc
        })
    })
}
