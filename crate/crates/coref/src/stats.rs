//! Candidate and pair counts of the enumerate-and-prune pipeline against the
//! start/end pipeline, in a three-row comparison table.

use std::fmt::Write as _;

use coref_core::corpus::Document;
use coref_core::extractor::{pipeline_stats, PipelineStats};
use coref_core::model::{CorefModel, DecodeOptions};

/// Counts for one document. Without a model, gold starts and gold mentions
/// stand in for predictions.
pub fn document_stats(
    doc: &Document,
    model: Option<&CorefModel>,
    span_len_cap: usize,
    top_k: f64,
) -> anyhow::Result<PipelineStats> {
    let (starts, n_mentions) = match model {
        None => {
            let mentions = doc.gold_mentions();
            let mut starts: Vec<usize> = mentions.iter().map(|m| m.start).collect();
            starts.dedup();
            (starts, mentions.len())
        }
        Some(model) => {
            let opts = DecodeOptions {
                emit_singletons: true,
                ..DecodeOptions::default()
            };
            let starts = predicted_starts(model, doc, opts.threshold)?;
            let pred = model.predict_document(doc, &opts)?;
            (starts, pred.clusters.iter().map(Vec::len).sum())
        }
    };
    Ok(pipeline_stats(doc.len(), &doc.sentence_ends, &starts, n_mentions, span_len_cap, top_k))
}

/// Source-document tokens whose start probability exceeds `threshold`.
fn predicted_starts(model: &CorefModel, doc: &Document, threshold: f64) -> anyhow::Result<Vec<usize>> {
    let mut starts = Vec::new();
    for seg in model.prepare(doc)? {
        let hidden = coref_core::nn::encode(&seg.ids, &model.params, &model.config.encoder)?;
        let probs = coref_core::extractor::score_starts(&hidden, &model.params)?;
        starts.extend(
            probs
                .iter()
                .enumerate()
                .filter(|&(t, &p)| p > threshold && !seg.is_blocked(t))
                .filter_map(|(t, _)| seg.origin[t]),
        );
    }
    Ok(starts)
}

pub fn corpus_stats(
    docs: &[&Document],
    model: Option<&CorefModel>,
    span_len_cap: usize,
    top_k: f64,
) -> anyhow::Result<PipelineStats> {
    let mut total = PipelineStats::default();
    for doc in docs {
        total.add(&document_stats(doc, model, span_len_cap, top_k)?);
    }
    Ok(total)
}

/// `baseline / pipeline` to three decimals, `inf` when the pipeline count
/// is zero.
pub fn reduction_factor(baseline: u64, pipeline: u64) -> String {
    if pipeline == 0 {
        "inf".to_string()
    } else {
        format!("{:.3}x", baseline as f64 / pipeline as f64)
    }
}

/// Table with summed counts, per-document means and reduction factors.
pub fn format_table(name: &str, n_docs: usize, s: &PipelineStats) -> String {
    let rows = [
        ("extraction", "enumeration", s.n_enumeration, "start-end", s.n_start_end),
        ("regularization", "span-length", s.n_span_len_capped, "eos", s.n_eos_regularized),
        ("clustering", "top-k", s.n_pairs_topk, "pred-only", s.n_pairs_pred_only),
    ];
    let mean = |v: u64| if n_docs == 0 { 0.0 } else { v as f64 / n_docs as f64 };
    let mut out = String::new();
    writeln!(out, "{name} ({n_docs} documents)").unwrap();
    writeln!(
        out,
        "{:<16}{:<14}{:>12}{:>14}  {:<12}{:>12}{:>14}{:>12}",
        "step", "baseline", "total", "per_doc", "pipeline", "total", "per_doc", "factor"
    )
    .unwrap();
    for (step, base_name, base, pipe_name, pipe) in rows {
        writeln!(
            out,
            "{step:<16}{base_name:<14}{base:>12}{:>14.1}  {pipe_name:<12}{pipe:>12}{:>14.1}{:>12}",
            mean(base),
            mean(pipe),
            reduction_factor(base, pipe)
        )
        .unwrap();
    }
    out
}
