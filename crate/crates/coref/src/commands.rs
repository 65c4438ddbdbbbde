//! The subcommands, callable without going through argument parsing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use coref_core::corpus::{CorefPrediction, Document};
use coref_core::metrics::{CorpusScorer, MetricReport, Prf};
use coref_core::model::{CorefModel, DecodeOptions};

use crate::checkpoint::load_model;
use crate::config::RunConfig;
use crate::corpus_io::read_corpus;
use crate::stats;
use crate::train::train_model;

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub config: PathBuf,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Trains and writes the best checkpoint to `out` and the epoch log to
/// `out` with a `.log` extension appended.
pub fn cmd_train(args: &TrainArgs, mut on_line: impl FnMut(&str)) -> anyhow::Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    config.train = args.train.clone().or(config.train);
    config.dev = args.dev.clone().or(config.dev);
    config.out = args.out.clone().or(config.out);
    let train_path = config.train.clone().context("no training file given (--train or \"train\")")?;
    let out = config.out.clone().context("no output path given (--out or \"out\")")?;
    let train = read_corpus(&train_path)?.into_documents();
    let dev = match &config.dev {
        Some(p) => read_corpus(p)?.into_documents(),
        None => train.clone(),
    };
    let outcome = train_model(&config, &train, &dev, &mut on_line)?;
    std::fs::write(&out, &outcome.best_checkpoint).with_context(|| format!("writing {}", out.display()))?;
    let log_path = log_path(&out);
    std::fs::write(&log_path, &outcome.log).with_context(|| format!("writing {}", log_path.display()))?;
    on_line(&format!(
        "saved epoch {} (dev CoNLL-F1 {:.6}) to {}",
        outcome.best_epoch,
        outcome.best_dev_f1,
        out.display()
    ));
    Ok(())
}

pub fn log_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".log");
    PathBuf::from(name)
}

pub fn load_model_file(path: &Path) -> anyhow::Result<(CorefModel, RunConfig)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_model(&bytes).with_context(|| format!("loading {}", path.display()))
}

#[derive(Debug, Clone, Default)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub output: PathBuf,
    pub gold_mentions: bool,
    pub threshold: Option<f64>,
    pub singletons: bool,
}

/// Writes predictions in the input's format.
pub fn cmd_predict(args: &PredictArgs) -> anyhow::Result<()> {
    let (model, config) = load_model_file(&args.model)?;
    let corpus = read_corpus(&args.input)?;
    let threshold = args.threshold.unwrap_or(config.threshold);
    if !(threshold > 0.0 && threshold < 1.0) {
        bail!("threshold must lie strictly between 0 and 1");
    }
    let opts = DecodeOptions {
        threshold,
        emit_singletons: args.singletons || config.emit_singletons,
        gold_mentions: args.gold_mentions,
    };
    let preds = corpus
        .documents()
        .into_iter()
        .map(|d| model.predict_document(d, &opts).with_context(|| format!("predicting {}", d.doc_id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let text = corpus.write_with(&preds)?;
    std::fs::write(&args.output, text).with_context(|| format!("writing {}", args.output.display()))
}

/// Pairs gold and predicted documents by `doc_id`; every id must appear on
/// both sides.
pub fn align<'a>(gold: &[&'a Document], pred: &[&'a Document]) -> anyhow::Result<Vec<(&'a Document, &'a Document)>> {
    let ids = |docs: &[&Document]| -> anyhow::Result<BTreeSet<String>> {
        let mut seen = BTreeSet::new();
        for d in docs {
            if !seen.insert(d.doc_id.clone()) {
                bail!("document id {:?} appears twice", d.doc_id);
            }
        }
        Ok(seen)
    };
    let (g, p) = (ids(gold)?, ids(pred)?);
    let missing: Vec<&String> = g.difference(&p).collect();
    let extra: Vec<&String> = p.difference(&g).collect();
    if !missing.is_empty() || !extra.is_empty() {
        bail!("unmatched documents: missing from predictions {missing:?}; not in gold {extra:?}");
    }
    Ok(gold
        .iter()
        .map(|g| (*g, *pred.iter().find(|p| p.doc_id == g.doc_id).expect("aligned")))
        .collect())
}

pub fn evaluate_files(gold: &Path, pred: &Path) -> anyhow::Result<MetricReport> {
    let gold = read_corpus(gold)?;
    let pred = read_corpus(pred)?;
    let mut scorer = CorpusScorer::new();
    for (g, p) in align(&gold.documents(), &pred.documents())? {
        let prediction = CorefPrediction {
            doc_id: p.doc_id.clone(),
            clusters: p.gold_clusters.clone(),
        };
        prediction.validate(g).with_context(|| format!("prediction for {}", g.doc_id))?;
        scorer.add_document(&g.gold_clusters, &prediction.clusters);
    }
    Ok(scorer.report())
}

fn prf_json(p: &Prf) -> serde_json::Value {
    serde_json::json!({ "p": round6(p.precision), "r": round6(p.recall), "f1": round6(p.f1) })
}

fn round6(v: f64) -> serde_json::Value {
    serde_json::Value::Number(serde_json::Number::from_f64((v * 1e6).round() / 1e6).expect("finite metric"))
}

/// `{muc, b3, ceaf_phi4, conll_f1, mention}` with six decimals.
pub fn report_json(report: &MetricReport) -> String {
    let v = serde_json::json!({
        "muc": prf_json(&report.muc),
        "b3": prf_json(&report.b3),
        "ceaf_phi4": prf_json(&report.ceaf_phi4),
        "conll_f1": round6(report.conll_f1),
        "mention": prf_json(&report.mention),
    });
    serde_json::to_string_pretty(&v).expect("report serializes")
}

pub fn cmd_evaluate(gold: &Path, pred: &Path) -> anyhow::Result<String> {
    Ok(report_json(&evaluate_files(gold, pred)?))
}

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub inputs: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub span_len_cap: usize,
    pub top_k: f64,
}

pub fn cmd_stats(args: &StatsArgs) -> anyhow::Result<String> {
    let model = args.model.as_deref().map(load_model_file).transpose()?.map(|(m, _)| m);
    let mut out = String::new();
    let mut total = coref_core::extractor::PipelineStats::default();
    let mut total_docs = 0;
    for path in &args.inputs {
        let corpus = read_corpus(path)?;
        let docs = corpus.documents();
        let s = stats::corpus_stats(&docs, model.as_ref(), args.span_len_cap, args.top_k)?;
        out.push_str(&stats::format_table(&path.display().to_string(), docs.len(), &s));
        out.push('\n');
        total.add(&s);
        total_docs += docs.len();
    }
    out.push_str(&stats::format_table("total", total_docs, &total));
    Ok(out)
}
