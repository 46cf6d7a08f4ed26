use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::metric::{cached_dist, nearest_knot, segment_lengths, DistanceCache, KnotCurve, Metric};
use crate::ppc::config::{Bandwidth, Kernel};

/// Floor on neighbour distances in the majorizer.
pub const NEIGHBOR_FLOOR: f64 = 1e-8;

/// Consecutive knots closer than this (relative to `1 + length`) are moved together.
pub const FUSE_TOL: f64 = 1e-6;

/// Assignment of every batch to its nearest knot (lowest index on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    pub cells: Vec<Vec<usize>>,
    /// Knot index per batch.
    pub assignment: Vec<usize>,
    /// Distance from each batch to its knot.
    pub distances: Vec<f64>,
}

impl VoronoiPartition {
    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }
}

/// Value of a principal-curve objective split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub total: f64,
    pub data_fit: f64,
    pub length: f64,
    /// Set when the nonlocal objective fell back to the local one on a zero-length curve.
    pub local_fallback: bool,
}

pub fn voronoi_cells<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
) -> Result<VoronoiPartition> {
    voronoi_cells_cached(metric, data, curve, None)
}

pub fn voronoi_cells_cached<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    cache: Option<&DistanceCache>,
) -> Result<VoronoiPartition> {
    let knots = curve.knots();
    let proj = data
        .par_iter()
        .map(|x| nearest_knot(metric, x, knots, |k| cached_dist(metric, cache, x, &knots[k])))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = vec![Vec::new(); knots.len()];
    for (n, p) in proj.iter().enumerate() {
        cells[p.knot_index].push(n);
    }
    Ok(VoronoiPartition {
        cells,
        assignment: proj.iter().map(|p| p.knot_index).collect(),
        distances: proj.iter().map(|p| p.distance).collect(),
    })
}

/// Row-normalized weights `W[j][k]` proportional to `w((arc(j, k) / L) / h_j)`,
/// or `None` for a zero-length curve.
pub fn kernel_weights<M: Metric>(
    metric: &M,
    curve: &KnotCurve<M::Point>,
    kernel: &Kernel,
    h: &[f64],
) -> Result<Option<Matrix>> {
    let k = curve.len();
    if h.len() != k {
        return Err(invalid("one bandwidth per knot required"));
    }
    if h.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("bandwidths must be positive"));
    }
    let segs = segment_lengths(metric, curve)?;
    Ok(weights_from_segments(&segs, kernel, h))
}

fn weights_from_segments(segs: &[f64], kernel: &Kernel, h: &[f64]) -> Option<Matrix> {
    let total: f64 = segs.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let k = segs.len() + 1;
    let mut cum = vec![0.0; k];
    for i in 1..k {
        cum[i] = cum[i - 1] + segs[i - 1];
    }
    let mut w = Matrix::from_fn(k, k, |j, i| kernel.eval((cum[i] - cum[j]).abs() / total / h[j]));
    for j in 0..k {
        let row = w.row_mut(j);
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    Some(w)
}

/// `(1/N) sum_n min_k d^2(x_n, gamma_k) + beta * length`.
pub fn objective_ppc_k<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    beta: f64,
) -> Result<Objective> {
    Ok(evaluate(metric, data, curve, beta, None, None)?.objective)
}

/// Nonlocal objective with kernel-smoothed cell contributions.
pub fn objective_ppc_kw<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    beta: f64,
    kernel: &Kernel,
    bandwidth: &Bandwidth,
) -> Result<Objective> {
    Ok(evaluate(metric, data, curve, beta, Some((kernel, bandwidth)), None)?.objective)
}

/// Objective together with the partition and kernel weights it was computed from.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub objective: Objective,
    pub partition: VoronoiPartition,
    pub weights: Option<Matrix>,
}

pub(crate) fn evaluate<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    beta: f64,
    nonlocal: Option<(&Kernel, &Bandwidth)>,
    cache: Option<&DistanceCache>,
) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(crate::error::Error::Empty("dataset"));
    }
    let partition = voronoi_cells_cached(metric, data, curve, cache)?;
    let segs = segment_lengths(metric, curve)?;
    let length: f64 = segs.iter().sum();
    let n = data.len() as f64;
    let mut weights = None;
    let mut local_fallback = false;
    if let Some((kernel, bandwidth)) = nonlocal {
        let h = bandwidth.resolve(&partition.counts())?;
        weights = weights_from_segments(&segs, kernel, &h);
        local_fallback = weights.is_none();
    }
    let data_fit = match &weights {
        None => partition.distances.iter().map(|d| d * d).sum::<f64>() / n,
        Some(w) => {
            let knots = curve.knots();
            let terms = data
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let j = partition.assignment[i];
                    let mut s = 0.0;
                    for (k, &wk) in w.row(j).iter().enumerate() {
                        if wk == 0.0 {
                            continue;
                        }
                        let d = if k == j {
                            partition.distances[i]
                        } else {
                            cached_dist(metric, cache, x, &knots[k])?
                        };
                        s += wk * d * d;
                    }
                    Ok(s)
                })
                .collect::<Result<Vec<f64>>>()?;
            terms.iter().sum::<f64>() / n
        }
    };
    Ok(Evaluation {
        objective: Objective {
            total: data_fit + beta * length,
            data_fit,
            length,
            local_fallback,
        },
        partition,
        weights,
    })
}

/// One forward and one backward block-coordinate sweep over unpinned knots.
///
/// Each knot moves to the weighted barycenter of its (kernel-weighted) data
/// and of its neighbours, which minimizes the quadratic majorizer of the
/// length terms built at the current neighbour distances.
pub fn update_knots<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    partition: &VoronoiPartition,
    beta: f64,
    weights: Option<&Matrix>,
) -> Result<KnotCurve<M::Point>> {
    let k = curve.len();
    if partition.cells.len() != k || partition.assignment.len() != data.len() {
        return Err(invalid("partition does not match curve and data"));
    }
    let n = data.len() as f64;
    // Data weights per knot, fixed for the whole sweep.
    let data_terms: Vec<Vec<(usize, f64)>> = (0..k)
        .map(|kk| match weights {
            None => partition.cells[kk].iter().map(|&i| (i, 1.0 / n)).collect(),
            Some(w) => partition
                .assignment
                .iter()
                .enumerate()
                .filter_map(|(i, &j)| {
                    let v = w[(j, kk)];
                    (v > 0.0).then_some((i, v / n))
                })
                .collect(),
        })
        .collect();
    let mut out = curve.clone();
    let order: Vec<usize> = (0..k).chain((0..k).rev()).filter(|&i| !curve.is_pinned(i)).collect();
    for kk in order {
        let current = out.knot(kk).clone();
        let mut points: Vec<&M::Point> = Vec::new();
        let mut wts: Vec<f64> = Vec::new();
        for &(i, v) in &data_terms[kk] {
            points.push(&data[i]);
            wts.push(v);
        }
        let mut neighbours = Vec::new();
        if beta > 0.0 {
            for nb in [kk.wrapping_sub(1), kk + 1] {
                if nb < k {
                    let c = metric.dist(&current, out.knot(nb))?.max(NEIGHBOR_FLOOR);
                    neighbours.push((out.knot(nb).clone(), beta / (2.0 * c)));
                }
            }
        }
        for (p, v) in &neighbours {
            points.push(p);
            wts.push(*v);
        }
        if wts.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let next = metric.barycenter(&points, &wts, &current)?;
        out.set_knot(kk, next);
    }
    if beta > 0.0 {
        fused_pass(metric, data, &mut out, &data_terms, beta)?;
    }
    Ok(out)
}

/// Moves each run of coincident unpinned knots as one knot.
///
/// Single-knot steps cannot separate a knot from a neighbour sitting on top
/// of it, because the majorizer weight of that neighbour is huge; updating
/// the run jointly lets it travel.
fn fused_pass<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &mut KnotCurve<M::Point>,
    data_terms: &[Vec<(usize, f64)>],
    beta: f64,
) -> Result<()> {
    let k = curve.len();
    let segs = segment_lengths(metric, curve)?;
    let tol = FUSE_TOL * (1.0 + segs.iter().sum::<f64>());
    let mut start = 0;
    while start < k {
        let mut end = start;
        while end + 1 < k && segs[end] <= tol {
            end += 1;
        }
        if end > start && (start..=end).all(|i| !curve.is_pinned(i)) {
            let current = curve.knot(start).clone();
            let mut points: Vec<&M::Point> = Vec::new();
            let mut wts: Vec<f64> = Vec::new();
            for terms in &data_terms[start..=end] {
                for &(i, v) in terms {
                    points.push(&data[i]);
                    wts.push(v);
                }
            }
            let mut neighbours = Vec::new();
            for nb in [start.wrapping_sub(1), end + 1] {
                if nb < k {
                    let c = metric.dist(&current, curve.knot(nb))?.max(NEIGHBOR_FLOOR);
                    neighbours.push((curve.knot(nb).clone(), beta / (2.0 * c)));
                }
            }
            for (p, v) in &neighbours {
                points.push(p);
                wts.push(*v);
            }
            if wts.iter().sum::<f64>() > 0.0 {
                let next = metric.barycenter(&points, &wts, &current)?;
                for i in start..=end {
                    curve.set_knot(i, next.clone());
                }
            }
        }
        start = end + 1;
    }
    Ok(())
}
