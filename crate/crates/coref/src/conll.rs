//! CoNLL-2012 column format.
//!
//! Only the token column (index 3), the speaker column (index 9, when the
//! row is wide enough) and the final coreference column are interpreted.
//! All other columns are kept verbatim so a document can be written back
//! with new coreference annotations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use coref_core::corpus::{Cluster, CorefPrediction, Document, Span};

use crate::FormatError;

const BEGIN: &str = "#begin document ";
const END: &str = "#end document";
const TOKEN_COL: usize = 3;
const SPEAKER_COL: usize = 9;
const NO_SPEAKER: &str = "-";

/// A parsed document plus the columns the parser does not interpret.
#[derive(Debug, Clone, PartialEq)]
pub struct ConllDoc {
    pub document: Document,
    /// Per token, every column except the last.
    pub rows: Vec<Vec<String>>,
}

impl ConllDoc {
    /// Synthesizes OntoNotes-shaped rows (12 columns) for a document that
    /// did not come from a CoNLL file.
    pub fn from_document(document: Document) -> ConllDoc {
        let mut rows = Vec::with_capacity(document.len());
        let mut sentence = 0;
        let mut sentence_start = 0;
        for (i, token) in document.tokens.iter().enumerate() {
            let speaker = document
                .speakers
                .as_ref()
                .map_or(NO_SPEAKER.to_string(), |s| s[sentence].clone());
            let mut row = vec![
                document.doc_id.clone(),
                "0".to_string(),
                (i - sentence_start).to_string(),
                token.clone(),
            ];
            row.extend(std::iter::repeat_n("-".to_string(), SPEAKER_COL - TOKEN_COL - 1));
            row.push(speaker);
            row.push("*".to_string());
            rows.push(row);
            if document.sentence_ends.get(sentence) == Some(&i) {
                sentence += 1;
                sentence_start = i + 1;
            }
        }
        ConllDoc { document, rows }
    }
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// One `(id`, `id)` or `(id)` item of a coreference cell.
enum Mark {
    Open(u64),
    Close(u64),
    Single(u64),
}

fn parse_cell(cell: &str, line: usize) -> Result<Vec<Mark>, FormatError> {
    if cell == "-" {
        return Ok(Vec::new());
    }
    let id = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| err(line, format!("bad cluster id {s:?} in coreference cell {cell:?}")))
    };
    cell.split('|')
        .map(|part| match (part.strip_prefix('('), part.strip_suffix(')')) {
            (Some(_), Some(_)) if part.len() >= 3 => Ok(Mark::Single(id(&part[1..part.len() - 1])?)),
            (Some(rest), None) => Ok(Mark::Open(id(rest)?)),
            (None, Some(rest)) => Ok(Mark::Close(id(rest)?)),
            _ => Err(err(line, format!("malformed coreference cell {cell:?}"))),
        })
        .collect()
}

#[derive(Default)]
struct Builder {
    doc_id: String,
    begin_line: usize,
    tokens: Vec<String>,
    rows: Vec<Vec<String>>,
    sentence_ends: Vec<usize>,
    speakers: Vec<String>,
    open: BTreeMap<u64, Vec<(usize, usize)>>,
    clusters: BTreeMap<u64, Vec<Span>>,
}

impl Builder {
    fn end_sentence(&mut self) {
        if self.tokens.len() > self.sentence_ends.last().map_or(0, |&e| e + 1) {
            self.sentence_ends.push(self.tokens.len() - 1);
        }
    }

    fn token(&mut self, line: usize, mut cols: Vec<String>) -> Result<(), FormatError> {
        if cols.len() <= TOKEN_COL + 1 {
            return Err(err(line, format!("expected more than {} columns, found {}", TOKEN_COL + 1, cols.len())));
        }
        let coref = cols.pop().expect("non-empty row");
        let index = self.tokens.len();
        if index == self.sentence_ends.last().map_or(0, |&e| e + 1) {
            let speaker = cols.get(SPEAKER_COL).filter(|_| cols.len() > SPEAKER_COL + 1);
            self.speakers.push(speaker.cloned().unwrap_or_else(|| NO_SPEAKER.to_string()));
        }
        for mark in parse_cell(&coref, line)? {
            match mark {
                Mark::Single(id) => self.clusters.entry(id).or_default().push(Span::new(index, index)),
                Mark::Open(id) => self.open.entry(id).or_default().push((index, line)),
                Mark::Close(id) => {
                    let (start, _) = self
                        .open
                        .get_mut(&id)
                        .and_then(Vec::pop)
                        .ok_or_else(|| err(line, format!("cluster {id} closed without an opening bracket")))?;
                    self.clusters.entry(id).or_default().push(Span::new(start, index));
                }
            }
        }
        self.tokens.push(cols[TOKEN_COL].clone());
        self.rows.push(cols);
        Ok(())
    }

    fn finish(mut self) -> Result<ConllDoc, FormatError> {
        if let Some((id, &(_, line))) = self
            .open
            .iter()
            .find_map(|(id, stack)| stack.first().map(|s| (id, s)))
        {
            return Err(err(line, format!("cluster {id} opened here is never closed")));
        }
        self.end_sentence();
        let speakers = if self.speakers.iter().all(|s| s == NO_SPEAKER) {
            None
        } else {
            Some(self.speakers)
        };
        let gold_clusters: Vec<Cluster> = self
            .clusters
            .into_values()
            .map(|mut spans| {
                spans.sort_unstable();
                spans
            })
            .collect();
        let document = Document {
            doc_id: self.doc_id,
            tokens: self.tokens,
            sentence_ends: self.sentence_ends,
            speakers,
            gold_clusters,
        };
        document.validate().map_err(|e| FormatError::Invalid {
            line: self.begin_line,
            source: e,
        })?;
        Ok(ConllDoc {
            document,
            rows: self.rows,
        })
    }
}

pub fn parse_conll(text: &str) -> Result<Vec<ConllDoc>, FormatError> {
    let mut docs = Vec::new();
    let mut current: Option<Builder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(id) = raw.strip_prefix(BEGIN) {
            if current.is_some() {
                return Err(err(line, "document begins before the previous one ended"));
            }
            current = Some(Builder {
                doc_id: id.to_string(),
                begin_line: line,
                ..Builder::default()
            });
        } else if trimmed.starts_with(END) {
            let builder = current
                .take()
                .ok_or_else(|| err(line, "#end document without #begin document"))?;
            docs.push(builder.finish()?);
        } else if trimmed.is_empty() {
            if let Some(b) = current.as_mut() {
                b.end_sentence();
            }
        } else if trimmed.starts_with('#') {
            continue;
        } else {
            let b = current
                .as_mut()
                .ok_or_else(|| err(line, "token row outside of a document"))?;
            b.token(line, trimmed.split_whitespace().map(String::from).collect())?;
        }
    }
    if current.is_some() {
        return Err(err(text.lines().count(), "missing #end document"));
    }
    Ok(docs)
}

/// Same-cluster spans that overlap without nesting. Sharing only a boundary
/// token is fine because closings are written before openings.
fn crossing(a: Span, b: Span) -> bool {
    let (first, second) = if a.start <= b.start { (a, b) } else { (b, a) };
    first.start < second.start && second.start < first.end && first.end < second.end
}

/// Coreference cells for `clusters` over `n` tokens. Within a cell,
/// closings come first, then single-token mentions, then openings (longer
/// spans first), so a cluster's span ending on a token never captures a
/// same-cluster span opening there.
pub fn coref_cells(n: usize, clusters: &[Cluster]) -> Result<Vec<String>, FormatError> {
    let mut closes: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut singles: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut opens: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, cluster) in clusters.iter().enumerate() {
        for (k, &span) in cluster.iter().enumerate() {
            if span.start > span.end || span.end >= n {
                return Err(FormatError::Serialize(format!(
                    "span ({}, {}) out of range for {n} tokens",
                    span.start, span.end
                )));
            }
            if let Some(&other) = cluster[..k].iter().find(|&&o| o == span || crossing(o, span)) {
                return Err(FormatError::Serialize(format!(
                    "spans ({}, {}) and ({}, {}) of cluster {id} cannot both be bracketed",
                    other.start, other.end, span.start, span.end
                )));
            }
            if span.start == span.end {
                singles[span.start].push(id);
            } else {
                opens[span.start].push((span.end, id));
                closes[span.end].push((span.start, id));
            }
        }
    }
    Ok((0..n)
        .map(|t| {
            closes[t].sort_unstable_by(|a, b| b.cmp(a));
            opens[t].sort_unstable_by(|a, b| b.cmp(a));
            let parts: Vec<String> = closes[t]
                .iter()
                .map(|&(_, id)| format!("{id})"))
                .chain(singles[t].iter().map(|id| format!("({id})")))
                .chain(opens[t].iter().map(|&(_, id)| format!("({id}")))
                .collect();
            if parts.is_empty() {
                "-".to_string()
            } else {
                parts.join("|")
            }
        })
        .collect())
}

/// Writes each document with `clusters[i]` in its coreference column.
pub fn write_conll(docs: &[ConllDoc], clusters: &[&[Cluster]]) -> Result<String, FormatError> {
    if docs.len() != clusters.len() {
        return Err(FormatError::Serialize(format!(
            "{} documents but {} cluster lists",
            docs.len(),
            clusters.len()
        )));
    }
    let mut out = String::new();
    for (doc, clusters) in docs.iter().zip(clusters) {
        let d = &doc.document;
        if doc.rows.len() != d.len() {
            return Err(FormatError::Serialize(format!("{}: row count differs from token count", d.doc_id)));
        }
        if let Some(t) = d.tokens.iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(FormatError::Serialize(format!("{}: token {t:?} cannot be written as a column", d.doc_id)));
        }
        let cells = coref_cells(d.len(), clusters)?;
        writeln!(out, "{BEGIN}{}", d.doc_id).unwrap();
        let mut sentence = 0;
        for (i, (row, cell)) in doc.rows.iter().zip(&cells).enumerate() {
            writeln!(out, "{}\t{cell}", row.join("\t")).unwrap();
            if d.sentence_ends.get(sentence) == Some(&i) {
                out.push('\n');
                sentence += 1;
            }
        }
        writeln!(out, "{END}").unwrap();
    }
    Ok(out)
}

/// Writes documents with their gold clusters.
pub fn write_gold_conll(docs: &[ConllDoc]) -> Result<String, FormatError> {
    let clusters: Vec<&[Cluster]> = docs.iter().map(|d| d.document.gold_clusters.as_slice()).collect();
    write_conll(docs, &clusters)
}

/// Writes predictions, matched to `docs` by `doc_id`.
pub fn write_predictions(docs: &[ConllDoc], preds: &[CorefPrediction]) -> Result<String, FormatError> {
    let by_id: BTreeMap<&str, &CorefPrediction> = preds.iter().map(|p| (p.doc_id.as_str(), p)).collect();
    let clusters = docs
        .iter()
        .map(|d| {
            by_id
                .get(d.document.doc_id.as_str())
                .map(|p| p.clusters.as_slice())
                .ok_or_else(|| FormatError::Serialize(format!("no prediction for document {}", d.document.doc_id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_conll(docs, &clusters)
}
