//! Maximum-weight one-to-one assignment (Hungarian method with potentials).

use alloc::vec;
use alloc::vec::Vec;

/// Best assignment for a `rows × cols` weight matrix given row-major.
/// Returns the total weight and, per row, the matched column (if any;
/// rows outnumbering columns stay unmatched).
pub fn max_weight_assignment(weights: &[f64], rows: usize, cols: usize) -> (f64, Vec<Option<usize>>) {
    assert_eq!(weights.len(), rows * cols, "weight matrix size");
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    let n = rows.max(cols);
    let max = weights.iter().copied().fold(0.0f64, f64::max);
    // Square cost matrix; padding cells cost `max` (weight 0).
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max - weights[i * cols + j]
        } else {
            max
        }
    };

    // 1-based arrays: p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matched = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j] - 1;
        if i < rows && j - 1 < cols {
            matched[i] = Some(j - 1);
            total += weights[i * cols + (j - 1)];
        }
    }
    (total, matched)
}
