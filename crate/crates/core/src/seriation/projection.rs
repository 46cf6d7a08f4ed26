use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric::{project, segment_lengths, KnotCurve, Metric};
use crate::seriation::result::{rank_labels, SeriationResult};

/// Arc-length positions of batches on a fitted curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPseudotimes {
    /// Normalized arc length in `[0, 1]`.
    pub values: Vec<f64>,
    /// Secondary sort key for batches that sit exactly on a knot: how much
    /// nearer the batch is to the following knot than to the preceding one
    /// (beyond the ends, how far it overshoots). Zero elsewhere.
    pub tiebreak: Vec<f64>,
    /// The curve has zero length and every value is 0.
    pub degenerate: bool,
}

/// Normalized arc position of each batch's nearest knot, optionally refined
/// onto the better of the two segments adjacent to that knot.
pub fn projection_pseudotime<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    refine: bool,
) -> Result<ProjectionPseudotimes> {
    let segs = segment_lengths(metric, curve)?;
    let total: f64 = segs.iter().sum();
    let n = data.len();
    if !(total > 0.0) {
        return Ok(ProjectionPseudotimes {
            values: vec![0.0; n],
            tiebreak: vec![0.0; n],
            degenerate: true,
        });
    }
    let k = curve.len();
    let mut cum = vec![0.0; k];
    for i in 1..k {
        cum[i] = cum[i - 1] + segs[i - 1];
    }
    let knots = curve.knots();
    let pairs = data
        .par_iter()
        .map(|x| -> Result<(f64, f64)> {
            let p = project(metric, x, curve)?;
            let j = p.knot_index;
            let (pos, at_knot) = if refine {
                refined_position(metric, x, knots, &segs, &cum, j)?
            } else {
                (cum[j], Some(j))
            };
            let tie = match at_knot {
                Some(i) => tiebreak(metric, x, knots, &segs, i)?,
                None => 0.0,
            };
            Ok(((pos / total).clamp(0.0, 1.0), tie))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionPseudotimes {
        values: pairs.iter().map(|p| p.0).collect(),
        tiebreak: pairs.iter().map(|p| p.1).collect(),
        degenerate: false,
    })
}

/// Best arc position on the segments next to knot `j`, and the knot the
/// batch sits on when the projection lands on one.
fn refined_position<M: Metric>(
    metric: &M,
    x: &M::Point,
    knots: &[M::Point],
    segs: &[f64],
    cum: &[f64],
    j: usize,
) -> Result<(f64, Option<usize>)> {
    let k = knots.len();
    let mut best: Option<(f64, f64, Option<usize>)> = None;
    for a in [j.checked_sub(1), Some(j)].into_iter().flatten() {
        if a + 1 >= k {
            continue;
        }
        let (t, d) = if segs[a] > 0.0 {
            metric.project_on_segment(x, &knots[a], &knots[a + 1])?
        } else {
            (0.0, metric.dist(x, &knots[a])?)
        };
        let knot = if t <= 0.0 {
            Some(a)
        } else if t >= 1.0 {
            Some(a + 1)
        } else {
            None
        };
        if best.is_none_or(|b| d < b.1) {
            best = Some((cum[a] + t * segs[a], d, knot));
        }
    }
    Ok(best.map_or((cum[j], Some(j)), |b| (b.0, b.2)))
}

/// `d(x, knot i-1) - d(x, knot i+1)`, with the missing neighbour at an end
/// replaced by the length of the adjacent segment.
fn tiebreak<M: Metric>(metric: &M, x: &M::Point, knots: &[M::Point], segs: &[f64], i: usize) -> Result<f64> {
    let k = knots.len();
    if k < 2 {
        return Ok(0.0);
    }
    let before = if i > 0 { metric.dist(x, &knots[i - 1])? } else { segs[0] };
    let after = if i + 1 < k {
        metric.dist(x, &knots[i + 1])?
    } else {
        segs[k - 2]
    };
    Ok(before - after)
}

/// Ordering of batches along a fitted curve; pseudotimes are evenly spaced
/// rank labels; batches on the same knot are ordered by proximity to its
/// neighbours, and exact ties share a label.
pub fn ppc_seriation<M: Metric>(
    metric: &M,
    data: &[M::Point],
    curve: &KnotCurve<M::Point>,
    refine: bool,
) -> Result<SeriationResult> {
    let p = projection_pseudotime(metric, data, curve, refine)?;
    let keys: Vec<(f64, f64)> = p.values.iter().copied().zip(p.tiebreak.iter().copied()).collect();
    let mut r = SeriationResult::from_pseudotimes("ppc", rank_labels(&keys));
    if p.degenerate {
        r = r.with_flag("degenerate_curve");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Euclidean, EuclideanPoint, Wasserstein};
    use crate::ot::DiscreteMeasure;

    fn p(v: &[f64]) -> EuclideanPoint {
        EuclideanPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn knot_positions() {
        let c = KnotCurve::new(vec![p(&[0.0]), p(&[1.0]), p(&[2.0])]).unwrap();
        let data = vec![p(&[0.0]), p(&[2.0]), p(&[1.0])];
        let r = projection_pseudotime(&Euclidean, &data, &c, false).unwrap();
        assert_eq!(r.values, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn refinement_projects_onto_segment() {
        let c = KnotCurve::new(vec![p(&[0.0, 0.0]), p(&[1.0, 0.0])]).unwrap();
        let r = projection_pseudotime(&Euclidean, &[p(&[0.5, 1.0])], &c, true).unwrap();
        assert_eq!(r.values, vec![0.5]);
        let coarse = projection_pseudotime(&Euclidean, &[p(&[0.5, 1.0])], &c, false).unwrap();
        assert_eq!(coarse.values, vec![0.0]);
    }

    #[test]
    fn overshoot_orders_points_past_the_ends() {
        let c = KnotCurve::new(vec![p(&[0.0]), p(&[1.0])]).unwrap();
        let data = vec![p(&[-0.5]), p(&[-0.1]), p(&[1.3]), p(&[1.1]), p(&[0.5])];
        let r = projection_pseudotime(&Euclidean, &data, &c, true).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0, 1.0, 1.0, 0.5]);
        let s = ppc_seriation(&Euclidean, &data, &c, true).unwrap();
        assert_eq!(s.permutation, vec![0, 1, 4, 3, 2]);
    }

    #[test]
    fn corner_ties_follow_neighbour_proximity() {
        let c = KnotCurve::new(vec![p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[1.0, 1.0])]).unwrap();
        let data = vec![p(&[1.2, -0.1]), p(&[1.1, -0.3])];
        let r = projection_pseudotime(&Euclidean, &data, &c, true).unwrap();
        assert_eq!(r.values, vec![0.5, 0.5]);
        assert!(r.tiebreak[1] < r.tiebreak[0]);
        let s = ppc_seriation(&Euclidean, &data, &c, true).unwrap();
        assert_eq!(s.permutation, vec![1, 0]);
    }

    #[test]
    fn degenerate_curve() {
        let c = KnotCurve::new(vec![p(&[1.0]), p(&[1.0])]).unwrap();
        let r = projection_pseudotime(&Euclidean, &[p(&[0.0]), p(&[3.0])], &c, true).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.values, vec![0.0, 0.0]);
    }

    #[test]
    fn wasserstein_refinement() {
        let w = Wasserstein::default();
        let d = |x: f64| DiscreteMeasure::dirac(&[x]).unwrap();
        let c = KnotCurve::new(vec![d(0.0), d(1.0), d(2.0)]).unwrap();
        let r = projection_pseudotime(&w, &[d(0.25), d(1.6)], &c, true).unwrap();
        assert!((r.values[0] - 0.125).abs() < 1e-4);
        assert!((r.values[1] - 0.8).abs() < 1e-4);
    }
}
