//! Dense linear assignment by shortest augmenting paths with lazily
//! updated dual potentials, `O(n^3)` worst case.

use crate::matrix::Matrix;

const NONE: usize = usize::MAX;

/// Minimum-cost perfect matching for a square cost matrix.
///
/// Returns `assign` with `assign[row] = col`.
pub fn solve_assignment(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "assignment needs a square cost matrix");
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    let mut path = vec![NONE; n];
    let mut spc = vec![f64::INFINITY; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);
    let mut visited_rows = vec![false; n];
    let mut visited_cols = vec![false; n];

    // Column reduction, row reduction and a greedy matching on zero reduced costs.
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = (0..n).map(|i| cost[(i, j)]).fold(f64::INFINITY, f64::min);
    }
    for i in 0..n {
        let row = cost.row(i);
        let (mut best, mut arg) = (f64::INFINITY, NONE);
        for (j, (&c, &vj)) in row.iter().zip(&v).enumerate() {
            let r = c - vj;
            if r < best || (r == best && row4col[j] == NONE && arg != NONE && row4col[arg] != NONE) {
                best = r;
                arg = j;
            }
        }
        u[i] = best;
        if row4col[arg] == NONE {
            row4col[arg] = i;
            col4row[i] = arg;
        }
    }

    for cur in 0..n {
        if col4row[cur] != NONE {
            continue;
        }
        spc.iter_mut().for_each(|x| *x = f64::INFINITY);
        visited_rows.iter_mut().for_each(|x| *x = false);
        visited_cols.iter_mut().for_each(|x| *x = false);
        remaining.clear();
        remaining.extend((0..n).rev());
        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            visited_rows[i] = true;
            let row = cost.row(i);
            let ui = u[i];
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - ui - v[j];
                if r < spc[j] {
                    path[j] = i;
                    spc[j] = r;
                }
                if spc[j] < lowest || (spc[j] == lowest && row4col[j] == NONE) {
                    lowest = spc[j];
                    index = it;
                }
            }
            assert!(index != NONE, "assignment costs must be finite");
            min_val = lowest;
            let j = remaining.swap_remove(index);
            visited_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };
        u[cur] += min_val;
        for r in 0..n {
            if visited_rows[r] && r != cur {
                u[r] += min_val - spc[col4row[r]];
            }
        }
        for c in 0..n {
            if visited_cols[c] {
                v[c] -= min_val - spc[c];
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }
    col4row
}
