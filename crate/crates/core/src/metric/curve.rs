use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metric::Metric;

/// Ordered knots `gamma_0 .. gamma_{K-1}` of a discrete curve, with an
/// optional sorted set of frozen indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotCurve<P> {
    knots: Vec<P>,
    pinned: Vec<usize>,
}

impl<P: Clone> KnotCurve<P> {
    pub fn new(knots: Vec<P>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Empty("knot curve"));
        }
        Ok(Self {
            knots,
            pinned: Vec::new(),
        })
    }

    pub fn with_pinned(knots: Vec<P>, mut pinned: Vec<usize>) -> Result<Self> {
        let mut c = Self::new(knots)?;
        pinned.sort_unstable();
        pinned.dedup();
        if let Some(&i) = pinned.iter().find(|&&i| i >= c.knots.len()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: c.knots.len(),
            });
        }
        c.pinned = pinned;
        Ok(c)
    }

    pub fn knots(&self) -> &[P] {
        &self.knots
    }

    pub fn knot(&self, k: usize) -> &P {
        &self.knots[k]
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    pub fn is_pinned(&self, k: usize) -> bool {
        self.pinned.binary_search(&k).is_ok()
    }

    /// Replaces an unpinned knot; pinned knots are left untouched.
    pub fn set_knot(&mut self, k: usize, p: P) -> bool {
        if self.is_pinned(k) {
            return false;
        }
        self.knots[k] = p;
        true
    }

    /// Reorders knots by `order` (new position `i` holds old knot `order[i]`).
    /// Pinned indices keep their positions; `order` must fix them.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let k = self.knots.len();
        let mut seen = vec![false; k];
        if order.len() != k {
            return Err(invalid("permutation length differs from knot count"));
        }
        for &o in order {
            if o >= k || std::mem::replace(&mut seen[o], true) {
                return Err(invalid("order is not a permutation"));
            }
        }
        if self.pinned.iter().any(|&p| order[p] != p) {
            return Err(invalid("permutation moves a pinned knot"));
        }
        Ok(Self {
            knots: order.iter().map(|&o| self.knots[o].clone()).collect(),
            pinned: self.pinned.clone(),
        })
    }

    pub fn into_knots(self) -> Vec<P> {
        self.knots
    }
}

/// Nearest knot and its distance; ties go to the lowest index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// Zero-based knot index.
    pub knot_index: usize,
    pub distance: f64,
}

/// Distances between consecutive knots.
pub fn segment_lengths<M: Metric>(metric: &M, curve: &KnotCurve<M::Point>) -> Result<Vec<f64>> {
    curve.knots.windows(2).map(|w| metric.dist(&w[0], &w[1])).collect()
}

pub fn discrete_length<M: Metric>(metric: &M, curve: &KnotCurve<M::Point>) -> Result<f64> {
    Ok(segment_lengths(metric, curve)?.iter().sum())
}

/// Nearest of `knots` to `x` using `dist(k)` for evaluations.
///
/// Knots are visited in increasing lower-bound order and the scan stops once
/// the bound exceeds the best distance, so the result equals a full scan.
pub fn nearest_knot<M: Metric>(
    metric: &M,
    x: &M::Point,
    knots: &[M::Point],
    mut dist: impl FnMut(usize) -> Result<f64>,
) -> Result<ProjectionResult> {
    if knots.is_empty() {
        return Err(Error::Empty("knot curve"));
    }
    let mut order: Vec<(f64, usize)> = knots
        .iter()
        .enumerate()
        .map(|(k, g)| (metric.lower_bound(x, g), k))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = ProjectionResult {
        knot_index: usize::MAX,
        distance: f64::INFINITY,
    };
    for (lb, k) in order {
        if lb > best.distance {
            break;
        }
        let d = dist(k)?;
        if d < best.distance || (d == best.distance && k < best.knot_index) {
            best = ProjectionResult {
                knot_index: k,
                distance: d,
            };
        }
    }
    Ok(best)
}

pub fn project<M: Metric>(metric: &M, x: &M::Point, curve: &KnotCurve<M::Point>) -> Result<ProjectionResult> {
    nearest_knot(metric, x, &curve.knots, |k| metric.dist(x, &curve.knots[k]))
}

/// Sum of consecutive distances between knots `j` and `k`.
pub fn arcwise_dist<M: Metric>(metric: &M, curve: &KnotCurve<M::Point>, j: usize, k: usize) -> Result<f64> {
    let n = curve.len();
    for i in [j, k] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    let (lo, hi) = (j.min(k), j.max(k));
    (lo..hi)
        .map(|i| metric.dist(&curve.knots[i], &curve.knots[i + 1]))
        .sum()
}

/// Output of [`constant_speed_resample`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled<P> {
    pub curve: KnotCurve<P>,
    /// Set when the input has zero length and every output knot is the first input knot.
    pub degenerate: bool,
}

/// `m` knots at equal arc-length fractions along the piecewise-geodesic curve.
pub fn constant_speed_resample<M: Metric>(
    metric: &M,
    curve: &KnotCurve<M::Point>,
    m: usize,
) -> Result<Resampled<M::Point>> {
    if curve.len() < 2 {
        return Err(invalid("resampling needs at least two knots"));
    }
    if m < 2 {
        return Err(invalid("resampling needs at least two output knots"));
    }
    let segs = segment_lengths(metric, curve)?;
    let total: f64 = segs.iter().sum();
    if total <= 0.0 {
        return Ok(Resampled {
            curve: KnotCurve::new(vec![curve.knots[0].clone(); m])?,
            degenerate: true,
        });
    }
    let mut out = Vec::with_capacity(m);
    out.push(curve.knots[0].clone());
    let mut seg = 0;
    let mut start = 0.0;
    for i in 1..m - 1 {
        let s = total * i as f64 / (m - 1) as f64;
        while seg + 1 < segs.len() && start + segs[seg] < s {
            start += segs[seg];
            seg += 1;
        }
        let t = if segs[seg] > 0.0 {
            ((s - start) / segs[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(metric.geodesic_point(&curve.knots[seg], &curve.knots[seg + 1], t)?);
    }
    out.push(curve.knots[curve.len() - 1].clone());
    let last = curve.len() - 1;
    let pins: Vec<usize> = curve
        .pinned
        .iter()
        .filter_map(|&p| match p {
            0 => Some(0),
            p if p == last => Some(m - 1),
            _ => None,
        })
        .collect();
    Ok(Resampled {
        curve: KnotCurve::with_pinned(out, pins)?,
        degenerate: false,
    })
}
