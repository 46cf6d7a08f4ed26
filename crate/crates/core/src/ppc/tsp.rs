//! Shortest Hamiltonian paths: Held–Karp for small instances, nearest
//! neighbour plus 2-opt otherwise.
//!
//! Solvers read distances through [`PathCost`], which may compute entries on
//! demand and supply lower bounds used to skip candidates that cannot win.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Instances with at most this many nodes are solved exactly.
pub const EXACT_MAX: usize = 12;

/// Number of nearest-neighbour tours that are polished with 2-opt.
const POLISHED_STARTS: usize = 8;

/// Symmetric pairwise costs read by the path solvers.
pub trait PathCost {
    fn size(&self) -> usize;
    fn cost(&mut self, i: usize, j: usize) -> f64;
    /// Never exceeds `cost(i, j)`.
    fn lower(&mut self, i: usize, j: usize) -> f64;
}

/// A fully computed distance matrix.
pub struct Dense<'a>(pub &'a Matrix);

impl PathCost for Dense<'_> {
    fn size(&self) -> usize {
        self.0.rows()
    }

    fn cost(&mut self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    fn lower(&mut self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Costs computed on first use and memoized, with precomputed lower bounds.
pub struct Lazy<F> {
    memo: Matrix,
    lb: Matrix,
    f: F,
    evals: usize,
    error: Option<Error>,
}

impl<F: FnMut(usize, usize) -> Result<f64>> Lazy<F> {
    pub fn new(n: usize, lower: impl Fn(usize, usize) -> f64, f: F) -> Self {
        let mut lb = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = lower(i, j).max(0.0);
                lb[(i, j)] = v;
                lb[(j, i)] = v;
            }
        }
        Self {
            memo: Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { f64::NAN }),
            lb,
            f,
            evals: 0,
            error: None,
        }
    }

    /// Number of distinct entries computed so far.
    pub fn evaluations(&self) -> usize {
        self.evals
    }

    /// The first error raised by the cost function, if any.
    pub fn finish(self) -> Result<()> {
        self.error.map_or(Ok(()), Err)
    }
}

impl<F: FnMut(usize, usize) -> Result<f64>> PathCost for Lazy<F> {
    fn size(&self) -> usize {
        self.memo.rows()
    }

    fn cost(&mut self, i: usize, j: usize) -> f64 {
        let v = self.memo[(i, j)];
        if !v.is_nan() {
            return v;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let v = match (self.f)(a, b) {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                f64::INFINITY
            }
        };
        self.evals += 1;
        self.memo[(i, j)] = v;
        self.memo[(j, i)] = v;
        v
    }

    fn lower(&mut self, i: usize, j: usize) -> f64 {
        let v = self.memo[(i, j)];
        if v.is_nan() {
            self.lb[(i, j)]
        } else {
            v
        }
    }
}

/// Nodes `lo..lo + n` of another cost, relabelled from 0.
pub struct Window<'a, C: ?Sized> {
    pub inner: &'a mut C,
    pub lo: usize,
    pub n: usize,
}

impl<C: PathCost + ?Sized> PathCost for Window<'_, C> {
    fn size(&self) -> usize {
        self.n
    }

    fn cost(&mut self, i: usize, j: usize) -> f64 {
        self.inner.cost(self.lo + i, self.lo + j)
    }

    fn lower(&mut self, i: usize, j: usize) -> f64 {
        self.inner.lower(self.lo + i, self.lo + j)
    }
}

pub fn path_length(dist: &Matrix, path: &[usize]) -> f64 {
    path_length_with(&mut Dense(dist), path)
}

pub fn path_length_with<C: PathCost + ?Sized>(c: &mut C, path: &[usize]) -> f64 {
    path.windows(2).map(|w| c.cost(w[0], w[1])).sum()
}

/// Shortest path through every node of `dist`, optionally starting at
/// `start` and/or ending at `end`.
///
/// Never longer than the identity order when that order satisfies the
/// endpoint constraints. Paths with both ends free are oriented so the first
/// node has the smaller label.
pub fn solve_path(dist: &Matrix, start: Option<usize>, end: Option<usize>) -> Vec<usize> {
    assert_eq!(dist.rows(), dist.cols(), "distance matrix must be square");
    solve_path_with(&mut Dense(dist), start, end)
}

/// [`solve_path`] over any [`PathCost`].
pub fn solve_path_with<C: PathCost + ?Sized>(c: &mut C, start: Option<usize>, end: Option<usize>) -> Vec<usize> {
    let n = c.size();
    if n <= 1 {
        return (0..n).collect();
    }
    if let (Some(s), Some(e)) = (start, end) {
        assert_ne!(s, e, "start and end must differ");
    }
    let mut path = if n <= EXACT_MAX {
        let full = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { c.cost(i, j) });
        held_karp(&full, start, end)
    } else {
        heuristic(c, start, end)
    };
    let identity: Vec<usize> = (0..n).collect();
    let identity_ok = start.is_none_or(|s| s == 0) && end.is_none_or(|e| e == n - 1);
    if identity_ok && path_length_with(c, &identity) <= path_length_with(c, &path) {
        path = identity;
    }
    if start.is_none() && end.is_none() && path[0] > path[n - 1] {
        path.reverse();
    }
    path
}

/// Exact path DP over subsets.
pub fn held_karp(dist: &Matrix, start: Option<usize>, end: Option<usize>) -> Vec<usize> {
    let n = dist.rows();
    assert!(n <= 20, "Held-Karp is limited to 20 nodes");
    if n == 1 {
        return vec![0];
    }
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    let mut parent = vec![usize::MAX; full * n];
    for i in 0..n {
        if start.is_none_or(|s| s == i) && (end != Some(i)) {
            dp[(1 << i) * n + i] = 0.0;
        }
    }
    for mask in 1..full {
        for last in 0..n {
            let cur = dp[mask * n + last];
            if !cur.is_finite() || mask & (1 << last) == 0 {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nmask = mask | (1 << next);
                if end == Some(next) && nmask != full - 1 {
                    continue;
                }
                let v = cur + dist[(last, next)];
                if v < dp[nmask * n + next] {
                    dp[nmask * n + next] = v;
                    parent[nmask * n + next] = last;
                }
            }
        }
    }
    let mask = full - 1;
    let mut last = (0..n)
        .filter(|&i| end.is_none_or(|e| e == i))
        .min_by(|&a, &b| dp[mask * n + a].total_cmp(&dp[mask * n + b]).then(a.cmp(&b)))
        .expect("nonempty");
    let mut path = Vec::with_capacity(n);
    let mut m = mask;
    loop {
        path.push(last);
        let p = parent[m * n + last];
        m &= !(1 << last);
        if p == usize::MAX {
            break;
        }
        last = p;
    }
    path.reverse();
    path
}

/// Other nodes of each node, ordered by lower bound then label.
fn candidate_lists<C: PathCost + ?Sized>(c: &mut C) -> Vec<Vec<usize>> {
    let n = c.size();
    (0..n)
        .map(|i| {
            let mut keyed: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (c.lower(i, j), j)).collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn nearest_neighbour<C: PathCost + ?Sized>(
    c: &mut C,
    cand: &[Vec<usize>],
    first: usize,
    end: Option<usize>,
) -> Vec<usize> {
    let n = c.size();
    let mut used = vec![false; n];
    let mut path = vec![first];
    used[first] = true;
    if let Some(e) = end {
        used[e] = true;
    }
    let mut cur = first;
    for _ in 0..n - 1 - usize::from(end.is_some()) {
        let (mut best, mut bd) = (usize::MAX, f64::INFINITY);
        for &j in &cand[cur] {
            if used[j] {
                continue;
            }
            if best != usize::MAX && c.lower(cur, j) > bd {
                break;
            }
            let d = c.cost(cur, j);
            if best == usize::MAX || d < bd || (d == bd && j < best) {
                best = j;
                bd = d;
            }
        }
        used[best] = true;
        path.push(best);
        cur = best;
    }
    if let Some(e) = end {
        path.push(e);
    }
    path
}

/// 2-opt on a path. Segment reversals that move a constrained end are skipped.
pub fn two_opt(dist: &Matrix, path: &mut [usize], fixed_start: bool, fixed_end: bool) {
    two_opt_with(&mut Dense(dist), path, fixed_start, fixed_end);
}

/// [`two_opt`] over any [`PathCost`]; moves ruled out by lower bounds are
/// not evaluated.
pub fn two_opt_with<C: PathCost + ?Sized>(c: &mut C, path: &mut [usize], fixed_start: bool, fixed_end: bool) {
    let n = path.len();
    if n < 3 {
        return;
    }
    let lo = usize::from(fixed_start);
    let hi = n - usize::from(fixed_end);
    loop {
        let mut improved = false;
        for i in lo..hi {
            for j in i + 1..hi {
                let before = if i > 0 { c.cost(path[i - 1], path[i]) } else { 0.0 };
                let after = if j + 1 < n { c.cost(path[j], path[j + 1]) } else { 0.0 };
                let threshold = before + after - 1e-12 * (1.0 + before + after);
                let lb_before = if i > 0 { c.lower(path[i - 1], path[j]) } else { 0.0 };
                let lb_after = if j + 1 < n { c.lower(path[i], path[j + 1]) } else { 0.0 };
                if lb_before + lb_after >= threshold {
                    continue;
                }
                let new_before = if i > 0 { c.cost(path[i - 1], path[j]) } else { 0.0 };
                let new_after = if j + 1 < n { c.cost(path[i], path[j + 1]) } else { 0.0 };
                if new_before + new_after < threshold {
                    path[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

fn heuristic<C: PathCost + ?Sized>(c: &mut C, start: Option<usize>, end: Option<usize>) -> Vec<usize> {
    let n = c.size();
    let cand = candidate_lists(c);
    let firsts: Vec<usize> = match start {
        Some(s) => vec![s],
        None => (0..n).filter(|&i| Some(i) != end).collect(),
    };
    let mut tours: Vec<(f64, Vec<usize>)> = firsts
        .into_iter()
        .map(|f| {
            let p = nearest_neighbour(c, &cand, f, end);
            (path_length_with(c, &p), p)
        })
        .collect();
    tours.sort_by(|a, b| a.0.total_cmp(&b.0));
    tours.truncate(POLISHED_STARTS);
    let identity_ok = start.is_none_or(|s| s == 0) && end.is_none_or(|e| e == n - 1);
    if identity_ok {
        let id: Vec<usize> = (0..n).collect();
        tours.push((path_length_with(c, &id), id));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (_, mut p) in tours {
        two_opt_with(c, &mut p, start.is_some(), end.is_some());
        let len = path_length_with(c, &p);
        if best.as_ref().is_none_or(|b| len < b.0) {
            best = Some((len, p));
        }
    }
    best.expect("at least one tour").1
}
