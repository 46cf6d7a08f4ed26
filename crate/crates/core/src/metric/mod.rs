//! Metric backends and discrete-curve geometry.

pub mod curve;
pub mod euclidean;
pub mod wasserstein;

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot::DiscreteMeasure;

pub use curve::{
    arcwise_dist, constant_speed_resample, discrete_length, nearest_knot, project, segment_lengths, KnotCurve,
    ProjectionResult, Resampled,
};
pub use euclidean::{Euclidean, EuclideanPoint};
pub use wasserstein::{OtMethod, Wasserstein};

/// Absolute tolerance on coordinates and weights for element equality.
pub const EQ_TOL: f64 = 1e-9;

/// A metric space with geodesics and weighted barycenters.
pub trait Metric: Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;

    /// Checks that a point is admissible for this backend.
    fn validate(&self, p: &Self::Point) -> Result<()>;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> Result<f64>;

    fn dist_sq(&self, a: &Self::Point, b: &Self::Point) -> Result<f64> {
        self.dist(a, b).map(|d| d * d)
    }

    /// Cheap value that never exceeds `dist(a, b)`.
    fn lower_bound(&self, _a: &Self::Point, _b: &Self::Point) -> f64 {
        0.0
    }

    /// Point at fraction `t` along a geodesic from `a` to `b`.
    fn geodesic_point(&self, a: &Self::Point, b: &Self::Point, t: f64) -> Result<Self::Point>;

    /// Minimizer (or a descent step towards it, started at `init`) of
    /// `sum_i w_i d^2(points_i, .)`.
    fn barycenter(&self, points: &[&Self::Point], weights: &[f64], init: &Self::Point) -> Result<Self::Point>;

    fn content_hash(&self, p: &Self::Point) -> u64;

    fn approx_eq(&self, a: &Self::Point, b: &Self::Point) -> bool;

    /// Whether distance evaluations are expensive enough to memoize.
    fn cache_worthy(&self) -> bool {
        false
    }

    /// Closest point to `x` on the geodesic segment `[a, b]`: returns `(t, distance)`.
    fn project_on_segment(&self, x: &Self::Point, a: &Self::Point, b: &Self::Point) -> Result<(f64, f64)>;
}

/// A point of either backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricElement {
    Euclidean(EuclideanPoint),
    Measure(DiscreteMeasure),
}

impl MetricElement {
    pub fn backend(&self) -> &'static str {
        match self {
            MetricElement::Euclidean(_) => "euclidean",
            MetricElement::Measure(_) => "wasserstein",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricElement::Euclidean(p) => p.dim(),
            MetricElement::Measure(m) => m.dim(),
        }
    }

    pub fn as_point(&self) -> Option<&EuclideanPoint> {
        match self {
            MetricElement::Euclidean(p) => Some(p),
            MetricElement::Measure(_) => None,
        }
    }

    pub fn as_measure(&self) -> Option<&DiscreteMeasure> {
        match self {
            MetricElement::Measure(m) => Some(m),
            MetricElement::Euclidean(_) => None,
        }
    }
}

impl From<EuclideanPoint> for MetricElement {
    fn from(p: EuclideanPoint) -> Self {
        MetricElement::Euclidean(p)
    }
}

impl From<DiscreteMeasure> for MetricElement {
    fn from(m: DiscreteMeasure) -> Self {
        MetricElement::Measure(m)
    }
}

/// Runtime-selected backend over [`MetricElement`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMetric {
    Euclidean(Euclidean),
    Wasserstein(Wasserstein),
}

impl AnyMetric {
    fn point<'a>(&self, p: &'a MetricElement) -> Result<&'a EuclideanPoint> {
        p.as_point().ok_or(Error::BackendMismatch {
            left: "euclidean",
            right: p.backend(),
        })
    }

    fn measure<'a>(&self, p: &'a MetricElement) -> Result<&'a DiscreteMeasure> {
        p.as_measure().ok_or(Error::BackendMismatch {
            left: "wasserstein",
            right: p.backend(),
        })
    }

    fn points<'a>(&self, ps: &[&'a MetricElement]) -> Result<Vec<&'a EuclideanPoint>> {
        ps.iter().map(|p| self.point(p)).collect()
    }

    fn measures<'a>(&self, ps: &[&'a MetricElement]) -> Result<Vec<&'a DiscreteMeasure>> {
        ps.iter().map(|p| self.measure(p)).collect()
    }
}

impl Metric for AnyMetric {
    type Point = MetricElement;

    fn name(&self) -> &'static str {
        match self {
            AnyMetric::Euclidean(m) => m.name(),
            AnyMetric::Wasserstein(m) => m.name(),
        }
    }

    fn validate(&self, p: &MetricElement) -> Result<()> {
        match self {
            AnyMetric::Euclidean(m) => m.validate(self.point(p)?),
            AnyMetric::Wasserstein(m) => m.validate(self.measure(p)?),
        }
    }

    fn dist(&self, a: &MetricElement, b: &MetricElement) -> Result<f64> {
        match self {
            AnyMetric::Euclidean(m) => m.dist(self.point(a)?, self.point(b)?),
            AnyMetric::Wasserstein(m) => m.dist(self.measure(a)?, self.measure(b)?),
        }
    }

    fn lower_bound(&self, a: &MetricElement, b: &MetricElement) -> f64 {
        match (self, a, b) {
            (AnyMetric::Wasserstein(m), MetricElement::Measure(a), MetricElement::Measure(b)) => m.lower_bound(a, b),
            _ => 0.0,
        }
    }

    fn geodesic_point(&self, a: &MetricElement, b: &MetricElement, t: f64) -> Result<MetricElement> {
        match self {
            AnyMetric::Euclidean(m) => m.geodesic_point(self.point(a)?, self.point(b)?, t).map(Into::into),
            AnyMetric::Wasserstein(m) => m.geodesic_point(self.measure(a)?, self.measure(b)?, t).map(Into::into),
        }
    }

    fn barycenter(&self, points: &[&MetricElement], weights: &[f64], init: &MetricElement) -> Result<MetricElement> {
        match self {
            AnyMetric::Euclidean(m) => m
                .barycenter(&self.points(points)?, weights, self.point(init)?)
                .map(Into::into),
            AnyMetric::Wasserstein(m) => m
                .barycenter(&self.measures(points)?, weights, self.measure(init)?)
                .map(Into::into),
        }
    }

    fn content_hash(&self, p: &MetricElement) -> u64 {
        match p {
            MetricElement::Euclidean(x) => Euclidean.content_hash(x),
            MetricElement::Measure(m) => m.content_hash(),
        }
    }

    fn approx_eq(&self, a: &MetricElement, b: &MetricElement) -> bool {
        match (a, b) {
            (MetricElement::Euclidean(x), MetricElement::Euclidean(y)) => Euclidean.approx_eq(x, y),
            (MetricElement::Measure(x), MetricElement::Measure(y)) => x.approx_eq(y, EQ_TOL),
            _ => false,
        }
    }

    fn cache_worthy(&self) -> bool {
        matches!(self, AnyMetric::Wasserstein(_))
    }

    fn project_on_segment(&self, x: &MetricElement, a: &MetricElement, b: &MetricElement) -> Result<(f64, f64)> {
        match self {
            AnyMetric::Euclidean(m) => m.project_on_segment(self.point(x)?, self.point(a)?, self.point(b)?),
            AnyMetric::Wasserstein(m) => m.project_on_segment(self.measure(x)?, self.measure(a)?, self.measure(b)?),
        }
    }
}

/// Memoized distances keyed by the content hashes of both arguments.
///
/// Safe for concurrent use; values are deterministic so racing writers agree.
#[derive(Debug, Default)]
pub struct DistanceCache {
    map: Mutex<HashMap<(u64, u64), f64>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: (u64, u64)) -> Option<f64> {
        self.map.lock().expect("cache lock").get(&key).copied()
    }

    pub fn insert(&self, key: (u64, u64), value: f64) {
        self.map.lock().expect("cache lock").insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("cache lock").clear();
    }

    /// Distance through the cache, computed on a miss.
    pub fn dist<M: Metric>(&self, metric: &M, a: &M::Point, b: &M::Point) -> Result<f64> {
        let key = (metric.content_hash(a), metric.content_hash(b));
        if let Some(d) = self.get(key) {
            return Ok(d);
        }
        let d = metric.dist(a, b)?;
        self.insert(key, d);
        Ok(d)
    }
}

/// Distance through an optional cache.
pub fn cached_dist<M: Metric>(metric: &M, cache: Option<&DistanceCache>, a: &M::Point, b: &M::Point) -> Result<f64> {
    match cache {
        Some(c) => c.dist(metric, a, b),
        None => metric.dist(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> MetricElement {
        EuclideanPoint::new(v.to_vec()).unwrap().into()
    }

    fn m(v: &[f64]) -> MetricElement {
        DiscreteMeasure::dirac(v).unwrap().into()
    }

    #[test]
    fn any_metric_dispatch() {
        let eu = AnyMetric::Euclidean(Euclidean);
        assert_eq!(eu.dist(&e(&[0.0, 0.0]), &e(&[3.0, 4.0])).unwrap(), 5.0);
        let w = AnyMetric::Wasserstein(Wasserstein::default());
        assert!((w.dist(&m(&[0.0]), &m(&[1.0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backend_mismatch() {
        let eu = AnyMetric::Euclidean(Euclidean);
        assert!(matches!(
            eu.dist(&e(&[0.0]), &m(&[1.0])),
            Err(Error::BackendMismatch { .. })
        ));
        let w = AnyMetric::Wasserstein(Wasserstein::default());
        assert!(matches!(
            w.dist(&e(&[0.0]), &m(&[1.0])),
            Err(Error::BackendMismatch { .. })
        ));
        assert!(!w.approx_eq(&e(&[0.0]), &m(&[0.0])));
    }

    #[test]
    fn geodesic_dispatch() {
        let w = AnyMetric::Wasserstein(Wasserstein::default());
        let g = w.geodesic_point(&m(&[0.0]), &m(&[2.0]), 0.25).unwrap();
        assert!(w.approx_eq(&g, &m(&[0.5])));
    }

    #[test]
    fn cache_hits() {
        let w = Wasserstein::default();
        let a = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[2.0]).unwrap();
        let cache = DistanceCache::new();
        assert_eq!(cache.dist(&w, &a, &b).unwrap(), 2.0);
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.dist(&w, &a, &b).unwrap(), 2.0);
        assert_eq!(cache.len(), 1);
        cache.clear();
        assert!(cache.is_empty());
    }
}
