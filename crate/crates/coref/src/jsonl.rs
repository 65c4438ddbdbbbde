//! One JSON document per line:
//! `{"doc_id", "sentences": [[token]], "speakers"?: [name], "clusters": [[[start, end]]]}`
//! with inclusive, document-global token indices.

use serde::{Deserialize, Serialize};

use coref_core::corpus::{Cluster, Document, Span};

use crate::FormatError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    doc_id: String,
    sentences: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speakers: Option<Vec<String>>,
    #[serde(default)]
    clusters: Vec<Vec<[usize; 2]>>,
}

fn to_document(record: Record, line: usize) -> Result<Document, FormatError> {
    let mut tokens = Vec::new();
    let mut sentence_ends = Vec::new();
    for sentence in record.sentences {
        if sentence.is_empty() {
            return Err(FormatError::Parse {
                line,
                message: "empty sentence".into(),
            });
        }
        tokens.extend(sentence);
        sentence_ends.push(tokens.len() - 1);
    }
    let gold_clusters = record
        .clusters
        .into_iter()
        .map(|c| c.into_iter().map(|[s, e]| Span::new(s, e)).collect())
        .collect();
    let doc = Document {
        doc_id: record.doc_id,
        tokens,
        sentence_ends,
        speakers: record.speakers,
        gold_clusters,
    };
    doc.validate().map_err(|source| FormatError::Invalid { line, source })?;
    Ok(doc)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Document>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let record: Record = serde_json::from_str(l).map_err(|e| FormatError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            to_document(record, i + 1)
        })
        .collect()
}

fn record(doc: &Document, clusters: &[Cluster]) -> Record {
    let mut sentences = Vec::with_capacity(doc.num_sentences());
    let mut start = 0;
    for &end in &doc.sentence_ends {
        sentences.push(doc.tokens[start..=end].to_vec());
        start = end + 1;
    }
    Record {
        doc_id: doc.doc_id.clone(),
        sentences,
        speakers: doc.speakers.clone(),
        clusters: clusters
            .iter()
            .map(|c| c.iter().map(|s| [s.start, s.end]).collect())
            .collect(),
    }
}

/// Serializes `docs` with `clusters[i]` replacing each document's gold
/// clusters.
pub fn write_jsonl(docs: &[Document], clusters: &[&[Cluster]]) -> Result<String, FormatError> {
    if docs.len() != clusters.len() {
        return Err(FormatError::Serialize(format!(
            "{} documents but {} cluster lists",
            docs.len(),
            clusters.len()
        )));
    }
    let mut out = String::new();
    for (doc, clusters) in docs.iter().zip(clusters) {
        if let Some(s) = clusters.iter().flatten().find(|s| s.start > s.end || s.end >= doc.len()) {
            return Err(FormatError::Serialize(format!(
                "{}: span ({}, {}) out of range",
                doc.doc_id, s.start, s.end
            )));
        }
        out.push_str(&serde_json::to_string(&record(doc, clusters)).expect("records serialize"));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_gold_jsonl(docs: &[Document]) -> Result<String, FormatError> {
    let clusters: Vec<&[Cluster]> = docs.iter().map(|d| d.gold_clusters.as_slice()).collect();
    write_jsonl(docs, &clusters)
}
