//! Transportation simplex on the bipartite spanning-tree basis.
//!
//! Rows are supply nodes `0..m`, columns are demand nodes `m..m+n`. The basis
//! always holds exactly `m + n - 1` cells forming a spanning tree, so
//! degenerate (zero-flow) basic cells are kept explicitly.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub flow: Matrix,
    pub cost: f64,
    pub pivots: usize,
}

/// Solves `min <C, P>` over couplings of `supply` and `demand`.
///
/// Both marginals must be nonnegative with equal totals (up to rounding).
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &Matrix) -> Result<SimplexSolution> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    assert_eq!((cost.rows(), cost.cols()), (m, n), "cost shape mismatch");

    let mut basis = northwest_corner(supply, demand);
    let scale = cost.as_slice().iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-12 * scale;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;

    let nodes = m + n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut pot = vec![0.0; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut parent_node = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut queue = VecDeque::with_capacity(nodes);
    let mut pivots = 0usize;
    let mut scan_start = 0usize;

    loop {
        // Rebuild the tree: potentials u (rows) / v (cols) with u_0 = 0 and
        // u_i + v_j = c_ij on basic cells.
        adj.iter_mut().for_each(Vec::clear);
        for (idx, c) in basis.iter().enumerate() {
            adj[c.row].push(idx);
            adj[m + c.col].push(idx);
        }
        parent_cell.iter_mut().for_each(|p| *p = usize::MAX);
        parent_node.iter_mut().for_each(|p| *p = usize::MAX);
        queue.clear();
        queue.push_back(0);
        parent_node[0] = 0;
        pot[0] = 0.0;
        depth[0] = 0;
        while let Some(node) = queue.pop_front() {
            for &idx in &adj[node] {
                let c = basis[idx];
                let other = if node < m { m + c.col } else { c.row };
                if parent_node[other] != usize::MAX {
                    continue;
                }
                parent_node[other] = node;
                parent_cell[other] = idx;
                depth[other] = depth[node] + 1;
                let cij = cost[(c.row, c.col)];
                pot[other] = cij - pot[node];
                queue.push_back(other);
            }
        }
        debug_assert!(parent_node.iter().all(|&p| p != usize::MAX), "basis is not spanning");

        // Pricing: most negative reduced cost, scanning rows in a rotating
        // order so that ties do not always favour the first rows.
        let mut best = -tol;
        let mut entering = None;
        for r in 0..m {
            let i = (scan_start + r) % m;
            let ui = pot[i];
            let row = cost.row(i);
            for j in 0..n {
                let rc = row[j] - ui - pot[m + j];
                if rc < best {
                    best = rc;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break;
        };
        scan_start = (ei + 1) % m;

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NoConvergence(format!(
                "transportation simplex exceeded {max_pivots} pivots"
            )));
        }

        // Cycle: entering cell plus the tree path from column ej to row ei.
        // Cells along the path alternate -, +, -, ... starting at the column side.
        let mut a = m + ej;
        let mut b = ei;
        let mut from_col: Vec<usize> = Vec::new();
        let mut from_row: Vec<usize> = Vec::new();
        while a != b {
            if depth[a] >= depth[b] {
                from_col.push(parent_cell[a]);
                a = parent_node[a];
            } else {
                from_row.push(parent_cell[b]);
                b = parent_node[b];
            }
        }
        from_row.reverse();
        let path: Vec<usize> = from_col.into_iter().chain(from_row).collect();

        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &idx) in path.iter().enumerate() {
            if k % 2 == 0 && basis[idx].flow < theta {
                theta = basis[idx].flow;
                leaving = idx;
            }
        }
        for (k, &idx) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis[idx].flow -= theta;
            } else {
                basis[idx].flow += theta;
            }
        }
        basis[leaving] = Cell {
            row: ei,
            col: ej,
            flow: theta,
        };
    }

    let mut flow = Matrix::zeros(m, n);
    let mut total = 0.0;
    for c in &basis {
        let f = c.flow.max(0.0);
        flow[(c.row, c.col)] += f;
        total += f * cost[(c.row, c.col)];
    }
    Ok(SimplexSolution {
        flow,
        cost: total,
        pivots,
    })
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<Cell> {
    let (m, n) = (supply.len(), demand.len());
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        basis.push(Cell {
            row: i,
            col: j,
            flow: x,
        });
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || s[i] <= d[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    // Any rounding residue lands on the last cell.
    if let Some(last) = basis.last_mut() {
        last.flow += s[m - 1].max(0.0).min(d[n - 1].max(0.0));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::assignment::solve_assignment;
    use rand::{Rng, SeedableRng};

    #[test]
    fn square_uniform_matches_assignment() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..=12 {
            let c = Matrix::from_fn(n, n, |_, _| rng.random::<f64>());
            let w = vec![1.0 / n as f64; n];
            let sol = solve_transport(&w, &w, &c).unwrap();
            let a = solve_assignment(&c);
            let best: f64 = a.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum::<f64>() / n as f64;
            assert!((sol.cost - best).abs() < 1e-12, "n={n}: {} vs {best}", sol.cost);
        }
    }

    #[test]
    fn marginals_hold_on_rectangular_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let m = rng.random_range(1..15);
            let n = rng.random_range(1..15);
            let mut a: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let mut b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let c = Matrix::from_fn(m, n, |_, _| rng.random::<f64>());
            let sol = solve_transport(&a, &b, &c).unwrap();
            for (r, x) in sol.flow.row_sums().iter().zip(&a) {
                assert!((r - x).abs() < 1e-12);
            }
            for (r, x) in sol.flow.col_sums().iter().zip(&b) {
                assert!((r - x).abs() < 1e-12);
            }
            assert!(sol.flow.as_slice().iter().all(|&f| f >= 0.0));
        }
    }

    #[test]
    fn two_by_two_by_hand() {
        // Supply (0.5, 0.5) at 0,1; demand (0.5, 0.5) at 2,3; squared cost.
        let c = Matrix::from_vec(2, 2, vec![4.0, 9.0, 1.0, 4.0]);
        let sol = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert!((sol.cost - 4.0).abs() < 1e-15);
        assert_eq!(sol.flow[(0, 1)], 0.0);
    }
}
