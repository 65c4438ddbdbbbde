//! Mention clustering heads and decoding.

pub mod category;
pub mod decode;
pub mod incremental;
pub mod pairwise;

pub use category::{classify_pair_category, PairCategory, PronounLexicon};
pub use decode::{decode_antecedents, drop_singletons_if_configured, UnionFind};
pub use incremental::{incr_assign, incr_cluster_score, mention_repr, ClusterScorer, ClusterState};
pub use pairwise::{mes_pair_prob, s2e_pair_prob, AntecedentHead, PairProbMatrix};

/// Which clustering head a model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClustererKind {
    /// Generic biaffine mention-antecedent scorer.
    S2e,
    /// Per-category mention-antecedent scorers.
    Mes,
    /// Incremental transformer over cluster members.
    Incr,
}

impl ClustererKind {
    pub const ALL: [ClustererKind; 3] = [ClustererKind::S2e, ClustererKind::Mes, ClustererKind::Incr];

    pub fn name(self) -> &'static str {
        match self {
            ClustererKind::S2e => "s2e",
            ClustererKind::Mes => "mes",
            ClustererKind::Incr => "incr",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        ClustererKind::ALL.into_iter().find(|k| k.name() == name)
    }
}
