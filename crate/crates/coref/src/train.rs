//! Training driver: epochs, dev validation, best-checkpoint selection and
//! early stopping.

use std::collections::HashMap;
use std::fmt::Write as _;

use anyhow::Context;

use coref_core::corpus::{Document, PreparedDoc, Vocab};
use coref_core::metrics::{CorpusScorer, MetricReport};
use coref_core::model::{CorefModel, DecodeOptions};
use coref_core::training::Trainer;

use crate::checkpoint::save_model;
use crate::config::RunConfig;

/// Vocabulary over `docs` after speaker insertion, capped at `limit`
/// entries (including `[UNK]`) by frequency, ties by first occurrence.
pub fn build_vocab(docs: &[Document], speaker_prefix: bool, limit: Option<usize>) -> Vocab {
    let prepared: Vec<Document> = docs
        .iter()
        .map(|d| {
            if speaker_prefix {
                coref_core::corpus::insert_speakers(d)
            } else {
                d.clone()
            }
        })
        .collect();
    let full = Vocab::build(&prepared);
    let Some(limit) = limit.filter(|&l| l < full.len()) else {
        return full;
    };
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in prepared.iter().flat_map(|d| &d.tokens) {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(usize, &String)> = full.tokens()[1..].iter().enumerate().collect();
    ranked.sort_by_key(|&(pos, t)| (std::cmp::Reverse(counts[t.as_str()]), pos));
    let mut kept: Vec<(usize, &String)> = ranked.into_iter().take(limit.saturating_sub(1)).collect();
    kept.sort_unstable();
    Vocab::from_tokens(kept.into_iter().map(|(_, t)| t.clone()).collect())
}

pub fn evaluate_model(model: &CorefModel, docs: &[Document], opts: &DecodeOptions) -> anyhow::Result<MetricReport> {
    let mut scorer = CorpusScorer::new();
    for doc in docs {
        let pred = model
            .predict_document(doc, opts)
            .with_context(|| format!("predicting {}", doc.doc_id))?;
        scorer.add_document(&doc.gold_clusters, &pred.clusters);
    }
    Ok(scorer.report())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CorefModel,
    /// Checkpoint bytes of the best model by dev CoNLL-F1.
    pub best_checkpoint: Vec<u8>,
    pub best_dev_f1: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// One line per epoch; contains no timings, so identical runs give
    /// identical logs.
    pub log: String,
}

/// Trains on `train`, validating on `dev` every `config.validate_every`
/// epochs. `on_line` sees every log line as it is produced.
pub fn train_model(
    config: &RunConfig,
    train: &[Document],
    dev: &[Document],
    mut on_line: impl FnMut(&str),
) -> anyhow::Result<TrainOutcome> {
    config.validate()?;
    anyhow::ensure!(!train.is_empty(), "training corpus is empty");
    let vocab = build_vocab(train, config.speaker_prefix, config.vocab);
    let mut model = CorefModel::initialize(config.model_config()?, vocab, config.seed)?;
    let segments: Vec<PreparedDoc> = train
        .iter()
        .map(|d| model.prepare(d).with_context(|| format!("preparing {}", d.doc_id)))
        .collect::<anyhow::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let train_config = config.train_config();
    let mut trainer = Trainer::new(train_config.clone(), segments)?;
    let opts = config.decode_options();

    let mut log = String::new();
    let mut emit = |line: String, log: &mut String| {
        on_line(&line);
        writeln!(log, "{line}").unwrap();
    };
    let mut best: Option<(f64, usize, Vec<u8>)> = None;
    let mut stale = 0;
    let mut epochs_run = 0;
    for epoch in 1..=train_config.epochs {
        let loss = trainer
            .run_epoch(&mut model)
            .with_context(|| format!("training aborted in epoch {epoch}"))?;
        epochs_run = epoch;
        let mut line = format!(
            "epoch {epoch} loss {:.6} start {:.6} end {:.6} clust {:.6}",
            loss.total, loss.start, loss.end, loss.clust
        );
        if epoch % config.validate_every == 0 || epoch == train_config.epochs {
            let report = evaluate_model(&model, dev, &opts)?;
            let improved = best.as_ref().is_none_or(|(f1, _, _)| report.conll_f1 > *f1);
            write!(line, " dev_conll_f1 {:.6}", report.conll_f1).unwrap();
            if improved {
                line.push_str(" best");
                best = Some((report.conll_f1, epoch, save_model(&model, config)));
                stale = 0;
            } else {
                stale += 1;
            }
            emit(line, &mut log);
            if train_config.patience.is_some_and(|p| stale >= p) {
                emit(format!("early stop after {stale} validations without improvement"), &mut log);
                break;
            }
        } else {
            emit(line, &mut log);
        }
    }
    let (best_dev_f1, best_epoch, best_checkpoint) = best.expect("the final epoch always validates");
    Ok(TrainOutcome {
        model,
        best_checkpoint,
        best_dev_f1,
        best_epoch,
        epochs_run,
        log,
    })
}
