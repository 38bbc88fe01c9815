//! Exact linear assignment by shortest augmenting paths (the classical
//! O(n^3) Hungarian scheme with potentials). Used for Wasserstein-2 between
//! uniformly weighted product-space samples of equal size.

use alloc::vec;
use alloc::vec::Vec;

/// Solves `min sum_i cost(i, sigma(i))` over permutations of `0..n`.
/// Returns the matching as `row -> column`.
///
/// Costs must be finite; nonnegativity is not required. Exact up to
/// floating-point comparison of path lengths, which is what "exact" can mean
/// for `f64` costs; unique optima are recovered precisely.
pub fn solve(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> Vec<usize> {
    assert!(n > 0);
    // 1-based arrays; index 0 is the virtual unmatched column.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
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
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the found path.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        row_to_col[matched_row[j] - 1] = j - 1;
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    row_to_col
}
