//! A full coreference model: encoder, mention extractor and one clustering
//! head, with the teacher-forced training loss and end-to-end decoding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::clusterers::incremental::{self, TransformerScorer};
use crate::clusterers::pairwise;
use crate::clusterers::{decode_antecedents, AntecedentHead, ClustererKind, PronounLexicon};
use crate::corpus::{canonicalize_clusters, prepare, Cluster, CorefPrediction, Document, PreparedDoc, Span, Vocab};
use crate::error::{Error, Result};
use crate::extractor::{self, StartSelection, DEFAULT_THRESHOLD};
use crate::graph::{Gradients, Graph, NodeId};
use crate::metrics::MentionClusterer;
use crate::nn::{self, EncoderConfig};
use crate::tensor::{ModelParams, ParamInit};
use crate::training::labels::LabelSet;
use crate::training::loss::LossBreakdown;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    /// Hidden width of every head's two-layer projection.
    pub d_hid: usize,
    /// Output width of the mention projections used by the clustering head.
    pub d_pair: usize,
    pub kind: ClustererKind,
    /// Insert `[SPK] name :` before speaker turns.
    pub speaker_prefix: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.d_hid == 0 || self.d_pair == 0 {
            return Err(Error::Config("d_hid and d_pair must be positive".into()));
        }
        if self.kind == ClustererKind::Incr && !self.d_pair.is_multiple_of(self.encoder.heads) {
            return Err(Error::Config(format!(
                "d_pair {} is not divisible by {} attention heads",
                self.d_pair, self.encoder.heads
            )));
        }
        Ok(())
    }

    pub fn init_params(&self, seed: u64) -> Result<ModelParams> {
        self.validate()?;
        let d = self.encoder.d_model;
        let mut init = ParamInit::new(seed);
        nn::init_encoder(&mut init, &self.encoder)?;
        extractor::init_extractor(&mut init, d, self.d_hid)?;
        match self.kind {
            ClustererKind::S2e => pairwise::init_s2e(&mut init, d, self.d_hid, self.d_pair)?,
            ClustererKind::Mes => pairwise::init_mes(&mut init, d, self.d_hid, self.d_pair)?,
            ClustererKind::Incr => {
                incremental::init_incremental(&mut init, d, self.d_hid, self.d_pair, self.encoder.heads)?
            }
        }
        Ok(init.finish())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    pub threshold: f64,
    pub emit_singletons: bool,
    /// Skip extraction and cluster the gold mentions.
    pub gold_mentions: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            threshold: DEFAULT_THRESHOLD,
            emit_singletons: false,
            gold_mentions: false,
        }
    }
}

/// Loss nodes of one document graph.
#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub start: NodeId,
    pub end: NodeId,
    pub clust: NodeId,
    pub total: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefModel {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub vocab: Vocab,
    pub lexicon: PronounLexicon,
}

impl CorefModel {
    pub fn new(config: ModelConfig, params: ModelParams, vocab: Vocab) -> Result<Self> {
        config.validate()?;
        if vocab.len() != config.encoder.vocab {
            return Err(Error::Config(format!(
                "vocabulary has {} entries, encoder expects {}",
                vocab.len(),
                config.encoder.vocab
            )));
        }
        Ok(CorefModel {
            config,
            params,
            vocab,
            lexicon: PronounLexicon::default(),
        })
    }

    /// Fresh parameters for `config`; the vocabulary size overrides
    /// `config.encoder.vocab`.
    pub fn initialize(mut config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        config.encoder.vocab = vocab.len();
        let params = config.init_params(seed)?;
        CorefModel::new(config, params, vocab)
    }

    pub fn prepare(&self, doc: &Document) -> Result<Vec<PreparedDoc>> {
        prepare(doc, &self.vocab, self.config.speaker_prefix, self.config.encoder.max_len)
    }

    /// Builds `L_start + L_end + L_clust` for one segment on `g`. Ends and
    /// clustering only ever see gold starts and gold mentions.
    pub fn loss_graph(&self, g: &mut Graph<'_>, doc: &PreparedDoc) -> Result<LossNodes> {
        let labels = LabelSet::from_document(&doc.doc);
        let zero = || vec![0.0];
        let hidden = nn::encode_graph(g, &doc.ids, &self.config.encoder)?;

        let start = if doc.ids.is_empty() {
            g.input(1, 1, zero())?
        } else {
            let p = extractor::start_probs(g, hidden)?;
            g.bce_sum(p, &labels.start)?
        };

        let end = if labels.gold_starts.is_empty() {
            g.input(1, 1, zero())?
        } else {
            let (p, spans) = extractor::end_probs(g, hidden, &labels.gold_starts, &doc.doc.sentence_ends)?;
            debug_assert_eq!(spans, labels.end_spans);
            g.bce_sum(p, &labels.end)?
        };

        let clust = match self.clust_probs(g, hidden, &labels, &doc.doc)? {
            Some((p, y)) => g.bce_sum(p, &y)?,
            None => g.input(1, 1, zero())?,
        };

        let partial = g.add(start, end)?;
        let total = g.add(partial, clust)?;
        Ok(LossNodes {
            start,
            end,
            clust,
            total,
        })
    }

    fn clust_probs(
        &self,
        g: &mut Graph<'_>,
        hidden: NodeId,
        labels: &LabelSet,
        doc: &Document,
    ) -> Result<Option<(NodeId, Vec<f64>)>> {
        let logits = match self.config.kind {
            ClustererKind::S2e | ClustererKind::Mes => {
                let head = self.antecedent_head(doc);
                pairwise::pair_logits(g, hidden, &labels.mentions, &labels.ant_pairs, head)?
                    .map(|l| (l, labels.ant.clone()))
            }
            ClustererKind::Incr => {
                if labels.incr.is_empty() {
                    None
                } else {
                    let reprs = incremental::mention_reprs(g, hidden, &labels.mentions)?;
                    let mut logits = Vec::with_capacity(labels.incr.len());
                    for cand in &labels.incr {
                        let mention = g.gather_rows(reprs, &[cand.mention])?;
                        let members = g.gather_rows(reprs, &cand.members)?;
                        logits.push(incremental::cluster_logit(g, mention, members, self.config.encoder.heads)?);
                    }
                    let stacked = g.concat_rows(&logits)?;
                    Some((stacked, labels.incr.iter().map(|c| c.label).collect()))
                }
            }
        };
        match logits {
            Some((l, y)) => Ok(Some((g.sigmoid(l)?, y))),
            None => Ok(None),
        }
    }

    fn antecedent_head<'a>(&'a self, doc: &'a Document) -> AntecedentHead<'a> {
        match self.config.kind {
            ClustererKind::Mes => AntecedentHead::Mes {
                tokens: &doc.tokens,
                lexicon: &self.lexicon,
            },
            _ => AntecedentHead::S2e,
        }
    }

    /// Loss values and parameter gradients for one segment.
    pub fn loss(&self, doc: &PreparedDoc) -> Result<(LossBreakdown, Gradients)> {
        let mut g = Graph::new(&self.params);
        let nodes = self.loss_graph(&mut g, doc)?;
        let breakdown = LossBreakdown::new(g.scalar(nodes.start), g.scalar(nodes.end), g.scalar(nodes.clust));
        if !breakdown.total.is_finite() {
            return Err(Error::NonFinite(format!("loss on {}", doc.doc.doc_id)));
        }
        let grads = g.backward(nodes.total)?;
        Ok((breakdown, grads))
    }

    /// Loss value only.
    pub fn loss_value(&self, params: &ModelParams, doc: &PreparedDoc) -> Result<f64> {
        let mut g = Graph::new(params);
        let nodes = self.loss_graph(&mut g, doc)?;
        Ok(g.scalar(nodes.total))
    }

    /// Clusters of segment-local spans, singletons kept; ordered by first
    /// mention.
    pub fn predict_segment(&self, doc: &PreparedDoc, opts: &DecodeOptions) -> Result<Vec<Cluster>> {
        let mut g = Graph::new(&self.params);
        let hidden = nn::encode_graph(&mut g, &doc.ids, &self.config.encoder)?;
        let mentions: Vec<Span> = if opts.gold_mentions {
            doc.doc.gold_mentions()
        } else {
            extractor::extract_on_graph(
                &mut g,
                hidden,
                &doc.doc.sentence_ends,
                opts.threshold,
                StartSelection::Predicted,
                |t| !doc.is_blocked(t),
            )?
            .into_iter()
            .map(|c| c.span)
            .collect()
        };
        if mentions.is_empty() {
            return Ok(Vec::new());
        }
        let groups = match self.config.kind {
            ClustererKind::S2e | ClustererKind::Mes => {
                let head = self.antecedent_head(&doc.doc);
                let probs = pairwise::antecedent_probs(&mut g, hidden, &mentions, head)?;
                decode_antecedents(&probs, opts.threshold)
            }
            ClustererKind::Incr => {
                let reprs = incremental::mention_reprs(&mut g, hidden, &mentions)?;
                let rows: Vec<Vec<f64>> = (0..mentions.len()).map(|i| g.row(reprs, i).to_vec()).collect();
                let scorer = TransformerScorer {
                    params: &self.params,
                    heads: self.config.encoder.heads,
                };
                incremental::incr_cluster_all(rows, &scorer, opts.threshold)?.clusters
            }
        };
        Ok(groups
            .into_iter()
            .map(|members| members.into_iter().map(|m| mentions[m]).collect())
            .collect())
    }

    /// Predicts every segment and maps spans back to `doc`'s indices.
    pub fn predict_document(&self, doc: &Document, opts: &DecodeOptions) -> Result<CorefPrediction> {
        let mut clusters = Vec::new();
        for segment in self.prepare(doc)? {
            for cluster in self.predict_segment(&segment, opts)? {
                let mapped: Cluster = cluster.iter().filter_map(|&s| segment.to_source(s)).collect();
                if opts.emit_singletons || mapped.len() > 1 {
                    clusters.push(mapped);
                }
            }
        }
        canonicalize_clusters(&mut clusters);
        Ok(CorefPrediction {
            doc_id: doc.doc_id.clone(),
            clusters,
        })
    }
}

impl MentionClusterer for CorefModel {
    fn cluster(&self, doc: &Document, _mentions: &[Span]) -> Result<Vec<Cluster>> {
        let opts = DecodeOptions {
            gold_mentions: true,
            emit_singletons: true,
            ..DecodeOptions::default()
        };
        Ok(self.predict_document(doc, &opts)?.clusters)
    }
}
