//! Mention-antecedent scorers: one generic biaffine scorer (`s2e`) and the
//! multi-expert variant (`mes`) that swaps in per-category start/end
//! projections while sharing the four bilinear matrices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::category::{classify_pair_category, PairCategory, PronounLexicon};
use crate::corpus::Span;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::nn::{self, EncoderOutput};
use crate::tensor::{ModelParams, ParamInit};

pub const S2E: &str = "s2e";
pub const MES: &str = "mes";

const BILINEAR: [&str; 4] = ["W_ss", "W_ee", "W_se", "W_es"];

pub fn init_s2e(init: &mut ParamInit, d_model: usize, d_hid: usize, d_pair: usize) -> Result<()> {
    nn::init_ffn(init, &format!("{S2E}.start"), d_model, d_hid, d_pair)?;
    nn::init_ffn(init, &format!("{S2E}.end"), d_model, d_hid, d_pair)?;
    init_bilinear(init, S2E, d_pair)
}

/// Six category-specific projection sets plus one shared bilinear form.
pub fn init_mes(init: &mut ParamInit, d_model: usize, d_hid: usize, d_pair: usize) -> Result<()> {
    for cat in PairCategory::ALL {
        nn::init_ffn(init, &format!("{MES}.{}.start", cat.key()), d_model, d_hid, d_pair)?;
        nn::init_ffn(init, &format!("{MES}.{}.end", cat.key()), d_model, d_hid, d_pair)?;
    }
    init_bilinear(init, MES, d_pair)
}

fn init_bilinear(init: &mut ParamInit, prefix: &str, d_pair: usize) -> Result<()> {
    for w in BILINEAR {
        init.weight(&format!("{prefix}.{w}"), d_pair, d_pair)?;
    }
    Ok(())
}

/// `[M, M]` logits; entry `(i, j)` scores mention `i` against antecedent `j`:
/// `s_i W_ss s_j + e_i W_ee e_j + s_i W_se e_j + e_i W_es s_j`.
fn bilinear_matrix(g: &mut Graph<'_>, starts: NodeId, ends: NodeId, prefix: &str) -> Result<NodeId> {
    let terms = [(starts, starts), (ends, ends), (starts, ends), (ends, starts)];
    let mut total: Option<NodeId> = None;
    for (w, (left, right)) in BILINEAR.iter().zip(terms) {
        let w = g.param(&format!("{prefix}.{w}"))?;
        let lw = g.matmul(left, w)?;
        let term = g.matmul_nt(lw, right)?;
        total = Some(match total {
            Some(t) => g.add(t, term)?,
            None => term,
        });
    }
    Ok(total.expect("four terms"))
}

fn projected(g: &mut Graph<'_>, hidden: NodeId, mentions: &[Span], prefix: &str) -> Result<(NodeId, NodeId)> {
    let start_rows: Vec<usize> = mentions.iter().map(|m| m.start).collect();
    let end_rows: Vec<usize> = mentions.iter().map(|m| m.end).collect();
    let xs = g.gather_rows(hidden, &start_rows)?;
    let xe = g.gather_rows(hidden, &end_rows)?;
    let s = nn::ffn(g, xs, &format!("{prefix}.start"))?;
    let e = nn::ffn(g, xe, &format!("{prefix}.end"))?;
    Ok((s, e))
}

/// Which antecedent scorer to run.
#[derive(Debug, Clone, Copy)]
pub enum AntecedentHead<'a> {
    S2e,
    /// Token strings of the (segment) document, for category detection.
    Mes {
        tokens: &'a [String],
        lexicon: &'a PronounLexicon,
    },
}

/// Pair logits `[k, 1]` for the `(mention, antecedent)` index pairs given,
/// in that order. `None` when `pairs` is empty.
pub fn pair_logits(
    g: &mut Graph<'_>,
    hidden: NodeId,
    mentions: &[Span],
    pairs: &[(usize, usize)],
    head: AntecedentHead<'_>,
) -> Result<Option<NodeId>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let m = mentions.len();
    match head {
        AntecedentHead::S2e => {
            let (s, e) = projected(g, hidden, mentions, S2E)?;
            let full = bilinear_matrix(g, s, e, S2E)?;
            let flat: Vec<usize> = pairs.iter().map(|&(i, j)| i * m + j).collect();
            Ok(Some(g.gather_elems(full, &flat)?))
        }
        AntecedentHead::Mes { tokens, lexicon } => {
            let categories: Vec<PairCategory> = pairs
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (mentions[i], mentions[j]);
                    classify_pair_category(&tokens[a.start..=a.end], &tokens[b.start..=b.end], lexicon)
                })
                .collect();
            let mut groups = Vec::new();
            // position of each pair inside the concatenated groups
            let mut position = alloc::vec![0usize; pairs.len()];
            let mut offset = 0;
            for cat in PairCategory::ALL {
                let members: Vec<usize> = (0..pairs.len()).filter(|&k| categories[k] == cat).collect();
                if members.is_empty() {
                    continue;
                }
                let prefix = format!("{MES}.{}", cat.key());
                let (s, e) = projected(g, hidden, mentions, &prefix)?;
                let full = bilinear_matrix_shared(g, s, e)?;
                let flat: Vec<usize> = members.iter().map(|&k| pairs[k].0 * m + pairs[k].1).collect();
                groups.push(g.gather_elems(full, &flat)?);
                for (r, &k) in members.iter().enumerate() {
                    position[k] = offset + r;
                }
                offset += members.len();
            }
            let stacked = g.concat_rows(&groups)?;
            Ok(Some(g.gather_elems(stacked, &position)?))
        }
    }
}

fn bilinear_matrix_shared(g: &mut Graph<'_>, s: NodeId, e: NodeId) -> Result<NodeId> {
    bilinear_matrix(g, s, e, MES)
}

/// Lower-triangular pair probabilities `p(i, j)` for `j < i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProbMatrix {
    n: usize,
    probs: Vec<f64>,
}

impl PairProbMatrix {
    pub fn new(n: usize) -> Self {
        PairProbMatrix {
            n,
            probs: alloc::vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    /// Row-major lower triangle: `(1,0), (2,0), (2,1), (3,0), ...`.
    pub fn from_lower(n: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), n * n.saturating_sub(1) / 2);
        PairProbMatrix { n, probs }
    }

    fn index(i: usize, j: usize) -> usize {
        assert!(j < i, "antecedent must precede mention");
        i * (i - 1) / 2 + j
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[Self::index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, p: f64) {
        self.probs[Self::index(i, j)] = p;
    }
}

/// All `(i, j)` with `j < i`, in [`PairProbMatrix`] order.
pub fn lower_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
}

pub fn antecedent_probs(
    g: &mut Graph<'_>,
    hidden: NodeId,
    mentions: &[Span],
    head: AntecedentHead<'_>,
) -> Result<PairProbMatrix> {
    let pairs = lower_pairs(mentions.len());
    let Some(logits) = pair_logits(g, hidden, mentions, &pairs, head)? else {
        return Ok(PairProbMatrix::new(mentions.len()));
    };
    let probs = g.sigmoid(logits)?;
    Ok(PairProbMatrix::from_lower(mentions.len(), g.value(probs).to_vec()))
}

fn single_pair(
    m_i: Span,
    m_j: Span,
    hidden: &EncoderOutput,
    params: &ModelParams,
    head: AntecedentHead<'_>,
) -> Result<f64> {
    let mut g = Graph::new(params);
    let h = g.input_tensor(&hidden.hidden)?;
    let logits = pair_logits(&mut g, h, &[m_j, m_i], &[(1, 0)], head)?.expect("one pair");
    Ok(nn::sigmoid(g.scalar(logits)))
}

/// `p_c(m_i, m_j)` with the generic scorer; `m_j` is the antecedent.
pub fn s2e_pair_prob(m_i: Span, m_j: Span, hidden: &EncoderOutput, params: &ModelParams) -> Result<f64> {
    single_pair(m_i, m_j, hidden, params, AntecedentHead::S2e)
}

/// `p_c(m_i, m_j)` routed through the category of the two spans' text.
pub fn mes_pair_prob(
    m_i: Span,
    m_j: Span,
    tokens: &[String],
    hidden: &EncoderOutput,
    params: &ModelParams,
    lexicon: &PronounLexicon,
) -> Result<f64> {
    single_pair(m_i, m_j, hidden, params, AntecedentHead::Mes { tokens, lexicon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use alloc::string::ToString;
    use alloc::vec;

    fn zeroed(f: impl Fn(&mut ParamInit)) -> ModelParams {
        let mut init = ParamInit::new(5);
        f(&mut init);
        let mut p = init.finish();
        p.zero_all();
        p
    }

    fn set(p: &mut ModelParams, name: &str, v: f32) {
        p.get_mut(name).unwrap().data_mut()[0] = v;
    }

    #[test]
    fn zero_bilinear_gives_half() {
        let mut init = ParamInit::new(1);
        init_s2e(&mut init, 3, 4, 2).unwrap();
        let mut params = init.finish();
        for w in BILINEAR {
            params.get_mut(&format!("s2e.{w}")).unwrap().data_mut().fill(0.0);
        }
        let h = EncoderOutput {
            hidden: Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap(),
        };
        let p = s2e_pair_prob(Span::new(1, 1), Span::new(0, 0), &h, &params).unwrap();
        assert_eq!(p, 0.5);
    }

    /// One-dimensional everything: F_s(x) = w' GeLU(w x). Choose hidden
    /// states so that F_s gives 2 and 3, then W_ss = 1 yields σ(6).
    #[test]
    fn scalar_bilinear_oracle() {
        let mut params = zeroed(|init| init_s2e(init, 1, 1, 1).unwrap());
        set(&mut params, "s2e.start.W", 1.0);
        set(&mut params, "s2e.start.W_prime", 1.0);
        set(&mut params, "s2e.W_ss", 1.0);
        let inv = |target: f64| {
            // Newton on GeLU(x) = target
            let mut x = target;
            for _ in 0..50 {
                x -= (nn::gelu(x) - target) / nn::gelu_grad(x);
            }
            x as f32
        };
        let h = EncoderOutput {
            hidden: Tensor::matrix(2, 1, vec![inv(3.0), inv(2.0)]).unwrap(),
        };
        // m_i starts at token 1 (F_s = 2), antecedent at token 0 (F_s = 3)
        let p = s2e_pair_prob(Span::new(1, 1), Span::new(0, 0), &h, &params).unwrap();
        let want = 1.0 / (1.0 + libm::exp(-6.0));
        assert!((p - want).abs() < 1e-6, "{p}");
        assert!((want - 0.997_527).abs() < 1e-6);
    }

    /// W_se alone scores s_i · e_j; with F_s != F_e the two orders differ.
    #[test]
    fn order_matters() {
        let mut params = zeroed(|init| init_s2e(init, 1, 1, 1).unwrap());
        for name in ["s2e.start.W", "s2e.start.W_prime", "s2e.W_se"] {
            set(&mut params, name, 1.0);
        }
        set(&mut params, "s2e.end.W", 2.0);
        set(&mut params, "s2e.end.W_prime", -1.0);
        let h = EncoderOutput {
            hidden: Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap(),
        };
        let (a, b) = (Span::new(0, 0), Span::new(1, 1));
        let f_s = |x: f64| nn::gelu(x);
        let f_e = |x: f64| -nn::gelu(2.0 * x);
        let forward = s2e_pair_prob(b, a, &h, &params).unwrap();
        let backward = s2e_pair_prob(a, b, &h, &params).unwrap();
        assert!((forward - nn::sigmoid(f_s(2.0) * f_e(1.0))).abs() < 1e-9);
        assert!((backward - nn::sigmoid(f_s(1.0) * f_e(2.0))).abs() < 1e-9);
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn mes_routes_by_category() {
        let lexicon = PronounLexicon::default();
        let mut params = zeroed(|init| init_mes(init, 1, 1, 1).unwrap());
        let h = EncoderOutput {
            hidden: Tensor::matrix(3, 1, vec![1.0, 1.0, 1.0]).unwrap(),
        };
        let tokens: Vec<String> = ["Italy", "Italy", "he"].iter().map(|t| t.to_string()).collect();
        let (italy1, italy2, he) = (Span::new(0, 0), Span::new(1, 1), Span::new(2, 2));
        assert_eq!(mes_pair_prob(italy2, italy1, &tokens, &h, &params, &lexicon).unwrap(), 0.5);

        set(&mut params, "mes.W_ss", 1.0);
        set(&mut params, "mes.match.start.W", 1.0);
        set(&mut params, "mes.match.start.W_prime", 1.0);
        set(&mut params, "mes.ent_pron.start.W", 1.0);
        set(&mut params, "mes.ent_pron.start.W_prime", -2.0);
        let same_hidden_match = mes_pair_prob(italy2, italy1, &tokens, &h, &params, &lexicon).unwrap();
        let same_hidden_ent = mes_pair_prob(he, italy1, &tokens, &h, &params, &lexicon).unwrap();
        let g1 = nn::gelu(1.0);
        assert!((same_hidden_match - nn::sigmoid(g1 * g1)).abs() < 1e-9);
        assert!((same_hidden_ent - nn::sigmoid(4.0 * g1 * g1)).abs() < 1e-9);
        assert_ne!(same_hidden_match, same_hidden_ent);
    }

    #[test]
    fn batched_probs_match_single_pairs() {
        let lexicon = PronounLexicon::default();
        let mut init = ParamInit::new(9);
        init_mes(&mut init, 4, 5, 3).unwrap();
        init_s2e(&mut init, 4, 5, 3).unwrap();
        let params = init.finish();
        let data: Vec<f32> = (0..20).map(|i| ((i * 7 % 11) as f32 - 5.0) / 4.0).collect();
        let h = EncoderOutput {
            hidden: Tensor::matrix(5, 4, data).unwrap(),
        };
        let tokens: Vec<String> = ["Obama", "he", "Barack", "Obama", "his"].iter().map(|t| t.to_string()).collect();
        let mentions = [Span::new(0, 0), Span::new(1, 1), Span::new(2, 3), Span::new(3, 3), Span::new(4, 4)];
        for head in [AntecedentHead::S2e, AntecedentHead::Mes { tokens: &tokens, lexicon: &lexicon }] {
            let mut g = Graph::new(&params);
            let hn = g.input_tensor(&h.hidden).unwrap();
            let matrix = antecedent_probs(&mut g, hn, &mentions, head).unwrap();
            for (i, j) in lower_pairs(mentions.len()) {
                let single = match head {
                    AntecedentHead::S2e => s2e_pair_prob(mentions[i], mentions[j], &h, &params),
                    AntecedentHead::Mes { .. } => {
                        mes_pair_prob(mentions[i], mentions[j], &tokens, &h, &params, &lexicon)
                    }
                }
                .unwrap();
                assert!((matrix.get(i, j) - single).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinear_scaling_preserves_argmax() {
        let mut init = ParamInit::new(21);
        init_s2e(&mut init, 4, 5, 3).unwrap();
        let params = init.finish();
        let mut scaled = params.clone();
        for w in BILINEAR {
            scaled.get_mut(&format!("s2e.{w}")).unwrap().data_mut().iter_mut().for_each(|v| *v *= 3.0);
        }
        let data: Vec<f32> = (0..24).map(|i| ((i * 5 % 13) as f32 - 6.0) / 3.0).collect();
        let hidden = Tensor::matrix(6, 4, data).unwrap();
        let mentions: Vec<Span> = (0..6).map(|i| Span::new(i, i)).collect();
        let probs = |p: &ModelParams| {
            let mut g = Graph::new(p);
            let hn = g.input_tensor(&hidden).unwrap();
            antecedent_probs(&mut g, hn, &mentions, AntecedentHead::S2e).unwrap()
        };
        let (a, b) = (probs(&params), probs(&scaled));
        for i in 1..6 {
            let best = |m: &PairProbMatrix| {
                (0..i).max_by(|&x, &y| m.get(i, x).partial_cmp(&m.get(i, y)).unwrap()).unwrap()
            };
            assert_eq!(best(&a), best(&b));
        }
    }
}
