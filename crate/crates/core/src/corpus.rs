//! Document model, speaker-prefix insertion, singleton filtering and the
//! sentence-safe segmentation applied before encoding.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Inclusive token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, token: usize) -> bool {
        self.start <= token && token <= self.end
    }
}

pub type Cluster = Vec<Span>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Index of the last token of every sentence, strictly increasing.
    pub sentence_ends: Vec<usize>,
    /// One speaker per sentence.
    pub speakers: Option<Vec<String>>,
    pub gold_clusters: Vec<Cluster>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_ends.len()
    }

    /// Sentence index holding `token`.
    pub fn sentence_of(&self, token: usize) -> usize {
        self.sentence_ends.partition_point(|&end| end < token)
    }

    /// First token of sentence `sentence`.
    pub fn sentence_start(&self, sentence: usize) -> usize {
        if sentence == 0 {
            0
        } else {
            self.sentence_ends[sentence - 1] + 1
        }
    }

    pub fn sentence_range(&self, sentence: usize) -> core::ops::RangeInclusive<usize> {
        self.sentence_start(sentence)..=self.sentence_ends[sentence]
    }

    pub fn span_text(&self, span: Span) -> &[String] {
        &self.tokens[span.start..=span.end]
    }

    /// Gold spans sorted by `(start, end)`.
    pub fn gold_mentions(&self) -> Vec<Span> {
        let mut spans: Vec<Span> = self.gold_clusters.iter().flatten().copied().collect();
        spans.sort_unstable();
        spans
    }

    /// Checks the structural invariants: sentence layout covers the tokens,
    /// speakers line up with sentences, and every gold span is in range,
    /// inside one sentence and in at most one cluster.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        let fail = |reason: String| Err(Error::doc(&self.doc_id, reason));
        if n == 0 {
            if !self.sentence_ends.is_empty() || !self.gold_clusters.is_empty() {
                return fail("empty document with sentences or clusters".into());
            }
        } else if self.sentence_ends.last() != Some(&(n - 1)) {
            return fail(format!("last sentence must end at token {}", n - 1));
        }
        if self.sentence_ends.windows(2).any(|w| w[0] >= w[1]) {
            return fail("sentence ends are not strictly increasing".into());
        }
        if let Some(speakers) = &self.speakers {
            if speakers.len() != self.sentence_ends.len() {
                return fail(format!(
                    "{} speakers for {} sentences",
                    speakers.len(),
                    self.sentence_ends.len()
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for (c, cluster) in self.gold_clusters.iter().enumerate() {
            if cluster.is_empty() {
                return fail(format!("cluster {c} is empty"));
            }
            for &span in cluster {
                validate_span(self, span)?;
                if !seen.insert(span) {
                    return fail(format!("span [{}, {}] appears twice", span.start, span.end));
                }
            }
        }
        Ok(())
    }
}

/// Range and single-sentence check for one span.
pub fn validate_span(doc: &Document, span: Span) -> Result<()> {
    let n = doc.len();
    if span.start > span.end || span.end >= n {
        return Err(Error::doc(
            &doc.doc_id,
            format!("span [{}, {}] out of range for {n} tokens", span.start, span.end),
        ));
    }
    if doc.sentence_of(span.start) != doc.sentence_of(span.end) {
        return Err(Error::doc(
            &doc.doc_id,
            format!("span [{}, {}] crosses a sentence boundary", span.start, span.end),
        ));
    }
    Ok(())
}

/// System output for one document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorefPrediction {
    pub doc_id: String,
    pub clusters: Vec<Cluster>,
}

impl CorefPrediction {
    /// Sorts spans inside each cluster and clusters by their first span.
    pub fn canonicalize(&mut self) {
        canonicalize_clusters(&mut self.clusters);
    }

    pub fn validate(&self, doc: &Document) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &span in self.clusters.iter().flatten() {
            validate_span(doc, span)?;
            if !seen.insert(span) {
                return Err(Error::doc(
                    &self.doc_id,
                    format!("predicted span [{}, {}] in two clusters", span.start, span.end),
                ));
            }
        }
        Ok(())
    }
}

pub fn canonicalize_clusters(clusters: &mut Vec<Cluster>) {
    clusters.retain(|c| !c.is_empty());
    for c in clusters.iter_mut() {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
}

/// Removes clusters of size one, keeping order.
pub fn filter_singletons(clusters: &[Cluster]) -> Vec<Cluster> {
    clusters.iter().filter(|c| c.len() > 1).cloned().collect()
}

pub const SPEAKER_TOKEN: &str = "[SPK]";
const SPEAKER_SEP: &str = ":";

/// Prefixes `[SPK] name :` to the first sentence and to every sentence whose
/// speaker differs from the previous one.
pub fn insert_speakers(doc: &Document) -> Document {
    insert_speakers_mapped(doc).0
}

/// [`insert_speakers`] plus, for each new token, the original token index it
/// came from (`None` for prefix tokens).
pub fn insert_speakers_mapped(doc: &Document) -> (Document, Vec<Option<usize>>) {
    let Some(speakers) = &doc.speakers else {
        return (doc.clone(), (0..doc.len()).map(Some).collect());
    };
    let mut tokens = Vec::with_capacity(doc.len() + 3 * speakers.len());
    let mut origin = Vec::with_capacity(tokens.capacity());
    let mut sentence_ends = Vec::with_capacity(doc.sentence_ends.len());
    // new index of each original token
    let mut shifted = Vec::with_capacity(doc.len());
    let mut previous: Option<&str> = None;
    for (s, speaker) in speakers.iter().enumerate() {
        if previous != Some(speaker.as_str()) {
            for t in [SPEAKER_TOKEN, speaker.as_str(), SPEAKER_SEP] {
                tokens.push(t.to_string());
                origin.push(None);
            }
        }
        previous = Some(speaker.as_str());
        for t in doc.sentence_range(s) {
            shifted.push(tokens.len());
            origin.push(Some(t));
            tokens.push(doc.tokens[t].clone());
        }
        sentence_ends.push(tokens.len() - 1);
    }
    let gold_clusters = doc
        .gold_clusters
        .iter()
        .map(|c| {
            c.iter()
                .map(|s| Span::new(shifted[s.start], shifted[s.end]))
                .collect()
        })
        .collect();
    let out = Document {
        doc_id: doc.doc_id.clone(),
        tokens,
        sentence_ends,
        speakers: doc.speakers.clone(),
        gold_clusters,
    };
    (out, origin)
}

/// Splits `doc` at sentence boundaries into pieces of at most `max_len`
/// tokens. Gold clusters are restricted to each piece. Returns each piece
/// with the index of its first token in `doc`.
pub fn split_segments(doc: &Document, max_len: usize) -> Result<Vec<(Document, usize)>> {
    if doc.len() <= max_len {
        return Ok(alloc::vec![(doc.clone(), 0)]);
    }
    let mut pieces: Vec<(usize, usize)> = Vec::new(); // sentence ranges [a, b)
    let mut first = 0;
    for s in 0..doc.num_sentences() {
        let len = doc.sentence_range(s).count();
        if len > max_len {
            return Err(Error::Length { len, max: max_len });
        }
        let start_tok = doc.sentence_start(first);
        if doc.sentence_ends[s] + 1 - start_tok > max_len {
            pieces.push((first, s));
            first = s;
        }
    }
    pieces.push((first, doc.num_sentences()));

    let mut out = Vec::with_capacity(pieces.len());
    for (k, &(a, b)) in pieces.iter().enumerate() {
        let offset = doc.sentence_start(a);
        let end = doc.sentence_ends[b - 1];
        let tokens = doc.tokens[offset..=end].to_vec();
        let sentence_ends = doc.sentence_ends[a..b].iter().map(|e| e - offset).collect();
        let speakers = doc.speakers.as_ref().map(|s| s[a..b].to_vec());
        let gold_clusters = doc
            .gold_clusters
            .iter()
            .map(|c| {
                c.iter()
                    .filter(|s| s.start >= offset && s.end <= end)
                    .map(|s| Span::new(s.start - offset, s.end - offset))
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect();
        out.push((
            Document {
                doc_id: format!("{}#{k}", doc.doc_id),
                tokens,
                sentence_ends,
                speakers,
                gold_clusters,
            },
            offset,
        ));
    }
    Ok(out)
}

pub const UNK: &str = "[UNK]";

/// Token vocabulary with `[UNK]` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::from_tokens(Vec::new())
    }
}

impl Vocab {
    /// Builds from an ordered token list; `[UNK]` is prepended if missing.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let mut vocab = Vocab {
            tokens: Vec::new(),
            index: BTreeMap::new(),
        };
        vocab.add(UNK);
        for t in tokens {
            vocab.add(&t);
        }
        vocab
    }

    /// Tokens in first-occurrence order over the documents.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut vocab = Vocab::default();
        for doc in docs {
            for t in &doc.tokens {
                vocab.add(t);
            }
        }
        vocab
    }

    fn add(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.index.insert(token.into(), self.tokens.len());
            self.tokens.push(token.into());
        }
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A model-ready segment: speaker prefixes inserted, split to the encoder
/// limit, tokens mapped to ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDoc {
    pub doc: Document,
    pub ids: Vec<usize>,
    /// Original token index for each segment token, `None` for speaker
    /// prefix tokens.
    pub origin: Vec<Option<usize>>,
}

impl PreparedDoc {
    /// Prefix tokens may never start a predicted mention.
    pub fn is_blocked(&self, token: usize) -> bool {
        self.origin[token].is_none()
    }

    /// Maps a segment span back to the source document.
    pub fn to_source(&self, span: Span) -> Option<Span> {
        Some(Span::new(self.origin[span.start]?, self.origin[span.end]?))
    }
}

pub fn prepare(doc: &Document, vocab: &Vocab, speaker_prefix: bool, max_len: usize) -> Result<Vec<PreparedDoc>> {
    let (with_speakers, origin) = if speaker_prefix {
        insert_speakers_mapped(doc)
    } else {
        (doc.clone(), (0..doc.len()).map(Some).collect())
    };
    split_segments(&with_speakers, max_len)?
        .into_iter()
        .map(|(segment, offset)| {
            let ids = vocab.ids(&segment.tokens);
            let origin = origin[offset..offset + segment.len()].to_vec();
            Ok(PreparedDoc {
                doc: segment,
                ids,
                origin,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn two_sentence_doc(speakers: Option<[&str; 2]>) -> Document {
        Document {
            doc_id: "d".into(),
            tokens: toks(&["John", "ran", ".", "He", "fell", "."]),
            sentence_ends: vec![2, 5],
            speakers: speakers.map(|s| s.iter().map(|x| x.to_string()).collect()),
            gold_clusters: vec![vec![Span::new(0, 0), Span::new(3, 3)]],
        }
    }

    #[test]
    fn validation_catches_cross_sentence_spans() {
        let mut doc = two_sentence_doc(None);
        doc.validate().unwrap();
        doc.gold_clusters.push(vec![Span::new(1, 3)]);
        assert!(doc.validate().is_err());
        let mut doc = two_sentence_doc(None);
        doc.gold_clusters.push(vec![Span::new(0, 0)]);
        assert!(doc.validate().is_err());
    }

    #[test]
    fn same_speaker_prefixes_first_sentence_only() {
        let doc = two_sentence_doc(Some(["A", "A"]));
        let out = insert_speakers(&doc);
        assert_eq!(out.tokens[..3], toks(&["[SPK]", "A", ":"])[..]);
        assert_eq!(out.len(), 9);
        assert_eq!(out.sentence_ends, vec![5, 8]);
        assert_eq!(out.gold_clusters, vec![vec![Span::new(3, 3), Span::new(6, 6)]]);
        out.validate().unwrap();
    }

    #[test]
    fn speaker_change_shifts_second_sentence_by_six() {
        let doc = two_sentence_doc(Some(["A", "B"]));
        let out = insert_speakers(&doc);
        assert_eq!(out.sentence_ends, vec![5, 11]);
        assert_eq!(out.gold_clusters[0][1], Span::new(3 + 6, 3 + 6));
        assert_eq!(out.span_text(out.gold_clusters[0][1]), &toks(&["He"])[..]);
    }

    #[test]
    fn no_speakers_is_identity() {
        let doc = two_sentence_doc(None);
        assert_eq!(insert_speakers(&doc), doc);
    }

    #[test]
    fn filter_singletons_examples() {
        let one = vec![vec![Span::new(0, 0)]];
        assert!(filter_singletons(&one).is_empty());
        let mixed = vec![vec![Span::new(0, 0), Span::new(2, 2)], vec![Span::new(5, 5)]];
        assert_eq!(filter_singletons(&mixed), vec![mixed[0].clone()]);
    }

    #[test]
    fn segments_respect_sentences() {
        let doc = two_sentence_doc(None);
        let pieces = split_segments(&doc, 4).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[1].1, 3);
        assert_eq!(pieces[1].0.gold_clusters, vec![vec![Span::new(0, 0)]]);
        assert!(split_segments(&doc, 2).is_err());
        assert_eq!(split_segments(&doc, 6).unwrap().len(), 1);
    }

    #[test]
    fn prepare_maps_back_to_source() {
        let doc = two_sentence_doc(Some(["A", "B"]));
        let vocab = Vocab::build([&insert_speakers(&doc)]);
        let segs = prepare(&doc, &vocab, true, 6).unwrap();
        assert_eq!(segs.len(), 2);
        let second = &segs[1];
        assert!(second.is_blocked(0));
        assert_eq!(second.to_source(Span::new(3, 3)), Some(Span::new(3, 3)));
        assert_eq!(vocab.id("never-seen"), 0);
    }
}
