//! From pairwise antecedent probabilities to clusters.

use alloc::vec;
use alloc::vec::Vec;

use super::pairwise::PairProbMatrix;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Components as sorted member lists, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let root = self.find(x);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(x);
        }
        out
    }
}

/// Each mention links to its most probable antecedent when that probability
/// exceeds `threshold` (ties go to the nearest antecedent); clusters are the
/// connected components of the links. Unlinked mentions come out as
/// singletons.
pub fn decode_antecedents(probs: &PairProbMatrix, threshold: f64) -> Vec<Vec<usize>> {
    let n = probs.len();
    let mut sets = UnionFind::new(n);
    for i in 1..n {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..i).rev() {
            let p = probs.get(i, j);
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((j, p));
            }
        }
        if let Some((j, p)) = best {
            if p > threshold {
                sets.union(i, j);
            }
        }
    }
    sets.components()
}

/// Drops size-one clusters unless `emit_singletons` is set.
pub fn drop_singletons_if_configured<T: Clone>(clusters: &[Vec<T>], emit_singletons: bool) -> Vec<Vec<T>> {
    clusters
        .iter()
        .filter(|c| emit_singletons || c.len() > 1)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, entries: &[((usize, usize), f64)]) -> PairProbMatrix {
        let mut m = PairProbMatrix::new(n);
        for &((i, j), p) in entries {
            m.set(i, j, p);
        }
        m
    }

    #[test]
    fn nothing_above_threshold() {
        let m = matrix(3, &[((1, 0), 0.4), ((2, 0), 0.5), ((2, 1), 0.1)]);
        assert_eq!(decode_antecedents(&m, 0.5), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn single_link() {
        let m = matrix(3, &[((1, 0), 0.8)]);
        assert_eq!(decode_antecedents(&m, 0.5), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn transitive_closure() {
        let m = matrix(3, &[((1, 0), 0.8), ((2, 1), 0.7), ((2, 0), 0.2)]);
        assert_eq!(decode_antecedents(&m, 0.5), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ties_prefer_nearest() {
        // mention 2 ties between 0 and 1; linking to 1 keeps 0 apart
        let m = matrix(3, &[((2, 0), 0.9), ((2, 1), 0.9)]);
        assert_eq!(decode_antecedents(&m, 0.5), vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn singleton_policy() {
        let clusters = vec![vec![1], vec![2, 3], vec![4]];
        assert_eq!(drop_singletons_if_configured(&clusters, false), vec![vec![2, 3]]);
        assert_eq!(drop_singletons_if_configured(&clusters, true), clusters);
        assert!(drop_singletons_if_configured(&[vec![1]], false).is_empty());
    }
}
