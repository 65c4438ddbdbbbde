//! Seeded generator of small sentence-split documents with gold clusters.
//! Entities are proper names (some with a one-token short form) and,
//! optionally, pronouns; the rest of each sentence is drawn from a fixed
//! filler list.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Cluster, Document, Span};

const FIRST: &[&str] = &[
    "Anna", "Boris", "Clara", "David", "Elena", "Felix", "Greta", "Hugo", "Ines", "Jonas", "Karin", "Lukas",
    "Maria", "Niko", "Olga", "Pavel", "Rosa", "Stefan", "Tanja", "Viktor",
];
const LAST: &[&str] = &["Berg", "Costa", "Dahl", "Falk", "Gruber", "Hahn", "Ivanov", "Jansen", "Keller", "Lund"];
const PLACES: &[&str] = &[
    "Paris", "Oslo", "Lima", "Cairo", "Kyoto", "Quito", "Rome", "Sofia", "Tunis", "Vienna", "Zagreb", "Accra",
];
const FILLER: &[&str] = &[
    "met", "saw", "called", "visited", "praised", "helped", "asked", "thanked", "with", "near", "after",
    "before", "today", "again", "quietly", "often", "and", "then", "later", "there",
];
const EOS: &str = ".";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Inclusive range of sentences per document.
    pub sentences: (usize, usize),
    /// Inclusive range of entities mentioned at least twice.
    pub entities: (usize, usize),
    /// Inclusive range of entities mentioned exactly once.
    pub singletons: (usize, usize),
    /// Probability of rendering a later person mention as a pronoun.
    pub pronoun_rate: f64,
    /// Attach alternating speaker names.
    pub speakers: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 20,
            sentences: (3, 5),
            entities: (2, 3),
            singletons: (0, 0),
            pronoun_rate: 0.0,
            speakers: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Entity {
    full: Vec<String>,
    short: Option<String>,
    pronoun: Option<&'static str>,
}

fn entity(rng: &mut ChaCha8Rng, used: &mut Vec<String>) -> Entity {
    loop {
        let e = match rng.random_range(0..3) {
            0 => {
                let place = PLACES.choose(rng).unwrap();
                Entity {
                    full: alloc::vec![place.to_string()],
                    short: None,
                    pronoun: Some("it"),
                }
            }
            1 => {
                let first = FIRST.choose(rng).unwrap();
                Entity {
                    full: alloc::vec![first.to_string()],
                    short: None,
                    pronoun: Some(if rng.random_bool(0.5) { "she" } else { "he" }),
                }
            }
            _ => {
                let first = FIRST.choose(rng).unwrap();
                let last = LAST.choose(rng).unwrap();
                Entity {
                    full: alloc::vec![first.to_string(), last.to_string()],
                    short: Some(last.to_string()),
                    pronoun: Some(if rng.random_bool(0.5) { "she" } else { "he" }),
                }
            }
        };
        // Distinct entities must not share any surface token.
        let surface: Vec<String> = e.full.clone();
        if surface.iter().all(|t| !used.contains(t)) {
            used.extend(surface);
            return e;
        }
    }
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi.max(lo))
}

/// One document. Every multi-mention entity appears at least twice; a
/// pronoun is only used after the entity has been named.
pub fn generate_document(rng: &mut ChaCha8Rng, config: &SynthConfig, doc_id: String) -> Document {
    let mut used = Vec::new();
    let n_multi = range(rng, config.entities);
    let n_single = range(rng, config.singletons);
    let entities: Vec<Entity> = (0..n_multi + n_single).map(|_| entity(rng, &mut used)).collect();

    // Mention slots: multi entities twice or more, singletons once.
    let mut slots: Vec<usize> = Vec::new();
    for e in 0..n_multi {
        let times = rng.random_range(2..=3);
        slots.extend(core::iter::repeat_n(e, times));
    }
    slots.extend(n_multi..n_multi + n_single);
    slots.shuffle(rng);

    let n_sentences = range(rng, config.sentences).max(1);
    let mut tokens: Vec<String> = Vec::new();
    let mut sentence_ends = Vec::new();
    let mut clusters: Vec<Cluster> = alloc::vec![Vec::new(); entities.len()];
    let mut named = alloc::vec![false; entities.len()];
    let per_sentence = slots.len().div_ceil(n_sentences);
    let mut chunks: Vec<&[usize]> = slots.chunks(per_sentence.max(1)).collect();
    while chunks.len() < n_sentences {
        chunks.push(&[]);
    }
    for chunk in chunks {
        if rng.random_bool(0.5) {
            tokens.push(FILLER.choose(rng).unwrap().to_string());
        }
        for &e in chunk {
            let ent = &entities[e];
            let start = tokens.len();
            let pronoun = ent.pronoun.filter(|_| named[e] && rng.random_bool(config.pronoun_rate));
            let surface: Vec<String> = match (pronoun, &ent.short) {
                (Some(p), _) => alloc::vec![p.to_string()],
                (None, Some(short)) if named[e] && rng.random_bool(0.5) => alloc::vec![short.clone()],
                _ => ent.full.clone(),
            };
            tokens.extend(surface);
            clusters[e].push(Span::new(start, tokens.len() - 1));
            named[e] = true;
            for _ in 0..rng.random_range(1..=2) {
                tokens.push(FILLER.choose(rng).unwrap().to_string());
            }
        }
        if tokens.len() == sentence_ends.last().map_or(0, |&e| e + 1) {
            tokens.push(FILLER.choose(rng).unwrap().to_string());
        }
        tokens.push(EOS.to_string());
        sentence_ends.push(tokens.len() - 1);
    }
    let speakers = config.speakers.then(|| {
        let who = [FIRST.choose(rng).unwrap(), FIRST.choose(rng).unwrap()];
        (0..sentence_ends.len())
            .map(|_| who[rng.random_range(0..2)].to_string())
            .collect()
    });
    clusters.retain(|c| !c.is_empty());
    Document {
        doc_id,
        tokens,
        sentence_ends,
        speakers,
        gold_clusters: clusters,
    }
}

pub fn generate_corpus(config: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.n_docs)
        .map(|i| generate_document(&mut rng, config, format!("synth_{i:03}")))
        .collect()
}

/// Every token the generator can emit.
pub fn synth_lexicon() -> Vec<&'static str> {
    let mut all: Vec<&str> = [FIRST, LAST, PLACES, FILLER, &[EOS, "he", "she", "it"]].concat();
    all.sort_unstable();
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocab;

    #[test]
    fn documents_validate() {
        let config = SynthConfig {
            n_docs: 50,
            pronoun_rate: 0.3,
            speakers: true,
            singletons: (0, 2),
            ..SynthConfig::default()
        };
        for doc in generate_corpus(&config) {
            doc.validate().unwrap();
            assert_eq!(doc.speakers.as_ref().unwrap().len(), doc.num_sentences());
        }
    }

    #[test]
    fn seeded() {
        let c = SynthConfig::default();
        assert_eq!(generate_corpus(&c), generate_corpus(&c));
        let other = SynthConfig { seed: 1, ..c.clone() };
        assert_ne!(generate_corpus(&c), generate_corpus(&other));
    }

    #[test]
    fn no_singletons_by_default_and_small_vocab() {
        let docs = generate_corpus(&SynthConfig::default());
        assert!(docs.iter().flat_map(|d| &d.gold_clusters).all(|c| c.len() >= 2));
        assert!(Vocab::build(&docs).len() <= 200);
        assert!(synth_lexicon().len() < 200);
    }

    #[test]
    fn singleton_share_is_controlled() {
        let config = SynthConfig {
            n_docs: 1,
            entities: (12, 12),
            singletons: (13, 13),
            sentences: (8, 8),
            ..SynthConfig::default()
        };
        let doc = &generate_corpus(&config)[0];
        assert_eq!(doc.gold_clusters.len(), 25);
        assert_eq!(doc.gold_clusters.iter().filter(|c| c.len() == 1).count(), 13);
        // 52% singleton clusters in, 48% of the clusters out.
        assert_eq!(crate::corpus::filter_singletons(&doc.gold_clusters).len(), 12);
    }
}
