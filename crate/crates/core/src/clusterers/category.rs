//! Linguistic pair categories used to route mention pairs to per-category
//! scorers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairCategory {
    PronPronC,
    PronPronNC,
    EntPron,
    Match,
    Contains,
    Other,
}

impl PairCategory {
    pub const ALL: [PairCategory; 6] = [
        PairCategory::PronPronC,
        PairCategory::PronPronNC,
        PairCategory::EntPron,
        PairCategory::Match,
        PairCategory::Contains,
        PairCategory::Other,
    ];

    /// Parameter-path segment for this category's projections.
    pub fn key(self) -> &'static str {
        match self {
            PairCategory::PronPronC => "pron_pron_c",
            PairCategory::PronPronNC => "pron_pron_nc",
            PairCategory::EntPron => "ent_pron",
            PairCategory::Match => "match",
            PairCategory::Contains => "contains",
            PairCategory::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PronounAttrs {
    pub person: Option<u8>,
    pub number: Option<Number>,
    pub gender: Option<Gender>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Number {
    Singular,
    Plural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Masculine,
    Feminine,
    Neuter,
}

impl PronounAttrs {
    /// Compatible unless some attribute is known on both sides and differs.
    pub fn compatible(&self, other: &PronounAttrs) -> bool {
        fn agree<T: PartialEq>(a: Option<T>, b: Option<T>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            }
        }
        agree(self.person, other.person)
            && agree(self.number, other.number)
            && agree(self.gender, other.gender)
    }
}

const BUILTIN_LEXICON: &str = include_str!("../../data/pronouns.tsv");

/// Pronoun lexicon: `pronoun<TAB>person<TAB>number<TAB>gender` per line with
/// `_` for unknown. Lookup is case-insensitive.
#[derive(Debug, Clone, PartialEq)]
pub struct PronounLexicon {
    entries: BTreeMap<String, PronounAttrs>,
}

impl Default for PronounLexicon {
    fn default() -> Self {
        PronounLexicon::parse(BUILTIN_LEXICON).expect("bundled lexicon parses")
    }
}

impl PronounLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("pronoun lexicon line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 tab-separated fields"));
            }
            let person = match fields[1] {
                "_" => None,
                p @ ("1" | "2" | "3") => Some(p.as_bytes()[0] - b'0'),
                _ => return Err(bad("person must be 1, 2, 3 or _")),
            };
            let number = match fields[2] {
                "_" => None,
                "sg" => Some(Number::Singular),
                "pl" => Some(Number::Plural),
                _ => return Err(bad("number must be sg, pl or _")),
            };
            let gender = match fields[3] {
                "_" => None,
                "m" => Some(Gender::Masculine),
                "f" => Some(Gender::Feminine),
                "n" => Some(Gender::Neuter),
                _ => return Err(bad("gender must be m, f, n or _")),
            };
            entries.insert(
                fields[0].to_lowercase(),
                PronounAttrs {
                    person,
                    number,
                    gender,
                },
            );
        }
        Ok(PronounLexicon { entries })
    }

    /// Attributes when the whole span is a single listed pronoun.
    pub fn lookup<S: AsRef<str>>(&self, span: &[S]) -> Option<&PronounAttrs> {
        match span {
            [single] => self.entries.get(&single.as_ref().to_lowercase()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const STOPWORDS: &[&str] = &["the", "a", "an", "this", "that", "these", "those", "'s", "'"];

/// Case-folded tokens without determiners or punctuation.
pub fn content_words<S: AsRef<str>>(span: &[S]) -> Vec<String> {
    span.iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .filter(|t| !t.chars().all(|c| c.is_ascii_punctuation()))
        .collect()
}

pub fn classify_pair_category<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    lexicon: &PronounLexicon,
) -> PairCategory {
    match (lexicon.lookup(a), lexicon.lookup(b)) {
        (Some(x), Some(y)) => {
            if x.compatible(y) {
                PairCategory::PronPronC
            } else {
                PairCategory::PronPronNC
            }
        }
        (Some(_), None) | (None, Some(_)) => PairCategory::EntPron,
        (None, None) => {
            let (ca, cb) = (content_words(a), content_words(b));
            if ca.is_empty() || cb.is_empty() {
                PairCategory::Other
            } else if ca == cb {
                PairCategory::Match
            } else {
                let (sa, sb): (BTreeSet<_>, BTreeSet<_>) = (ca.iter().collect(), cb.iter().collect());
                if sa.is_subset(&sb) || sb.is_subset(&sa) {
                    PairCategory::Contains
                } else {
                    PairCategory::Other
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(a: &str, b: &str) -> PairCategory {
        let lex = PronounLexicon::default();
        let a: Vec<&str> = a.split(' ').collect();
        let b: Vec<&str> = b.split(' ').collect();
        classify_pair_category(&a, &b, &lex)
    }

    #[test]
    fn listed_examples() {
        assert_eq!(cat("I", "I"), PairCategory::PronPronC);
        assert_eq!(cat("I", "my"), PairCategory::PronPronC);
        assert_eq!(cat("she", "her"), PairCategory::PronPronC);
        assert_eq!(cat("I", "he"), PairCategory::PronPronNC);
        assert_eq!(cat("She", "my"), PairCategory::PronPronNC);
        assert_eq!(cat("his", "her"), PairCategory::PronPronNC);
        assert_eq!(cat("George", "he"), PairCategory::EntPron);
        assert_eq!(cat("CNN", "it"), PairCategory::EntPron);
        assert_eq!(cat("Tom Cruise", "his"), PairCategory::EntPron);
        assert_eq!(cat("Italy", "Italy"), PairCategory::Match);
        assert_eq!(cat("Barack Obama", "Obama"), PairCategory::Contains);
        assert_eq!(cat("the car", "a dog"), PairCategory::Other);
    }

    #[test]
    fn determiners_are_ignored() {
        assert_eq!(cat("the president", "President"), PairCategory::Match);
        assert_eq!(cat("the", "a"), PairCategory::Other);
    }

    #[test]
    fn lexicon_parsing() {
        let lex = PronounLexicon::parse("xe\t3\tsg\t_\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert!(lex.lookup(&["XE"]).is_some());
        assert!(PronounLexicon::parse("xe\t4\tsg\t_\n").is_err());
        assert!(PronounLexicon::parse("xe\t3\tsg\n").is_err());
    }
}
