//! Reading and writing a corpus in whichever format it came in.

use std::path::Path;

use anyhow::Context;

use coref_core::corpus::{Cluster, CorefPrediction, Document};

use crate::conll::{self, ConllDoc};
use crate::jsonl;
use crate::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub enum Corpus {
    Conll(Vec<ConllDoc>),
    Jsonl(Vec<Document>),
}

impl Corpus {
    /// JSONL when the first non-blank character opens an object, CoNLL
    /// otherwise. An empty input is an empty JSONL corpus.
    pub fn parse(text: &str) -> Result<Corpus, FormatError> {
        match text.trim_start().chars().next() {
            None => Ok(Corpus::Jsonl(Vec::new())),
            Some('{') => Ok(Corpus::Jsonl(jsonl::parse_jsonl(text)?)),
            Some(_) => Ok(Corpus::Conll(conll::parse_conll(text)?)),
        }
    }

    pub fn documents(&self) -> Vec<&Document> {
        match self {
            Corpus::Conll(docs) => docs.iter().map(|d| &d.document).collect(),
            Corpus::Jsonl(docs) => docs.iter().collect(),
        }
    }

    pub fn into_documents(self) -> Vec<Document> {
        match self {
            Corpus::Conll(docs) => docs.into_iter().map(|d| d.document).collect(),
            Corpus::Jsonl(docs) => docs,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Conll(docs) => docs.len(),
            Corpus::Jsonl(docs) => docs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serializes with `preds` (in document order) as the clusters.
    pub fn write_with(&self, preds: &[CorefPrediction]) -> Result<String, FormatError> {
        match self {
            Corpus::Conll(docs) => conll::write_predictions(docs, preds),
            Corpus::Jsonl(docs) => {
                let clusters: Vec<&[Cluster]> = preds.iter().map(|p| p.clusters.as_slice()).collect();
                jsonl::write_jsonl(docs, &clusters)
            }
        }
    }
}

pub fn read_corpus(path: &Path) -> anyhow::Result<Corpus> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Corpus::parse(&text).with_context(|| format!("parsing {}", path.display()))
}
