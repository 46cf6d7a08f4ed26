use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metric::{Metric, EQ_TOL};

/// A finite vector in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanPoint(Vec<f64>);

impl EuclideanPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinate"));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Euclidean distance on `R^d`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Euclidean;

impl Euclidean {
    fn check(&self, a: &EuclideanPoint, b: &EuclideanPoint) -> Result<()> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        Ok(())
    }
}

impl Metric for Euclidean {
    type Point = EuclideanPoint;

    fn name(&self) -> &'static str {
        "euclidean"
    }

    fn validate(&self, p: &EuclideanPoint) -> Result<()> {
        if p.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinate"));
        }
        Ok(())
    }

    fn dist(&self, a: &EuclideanPoint, b: &EuclideanPoint) -> Result<f64> {
        self.dist_sq(a, b).map(f64::sqrt)
    }

    fn dist_sq(&self, a: &EuclideanPoint, b: &EuclideanPoint) -> Result<f64> {
        self.check(a, b)?;
        Ok(a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum())
    }

    fn geodesic_point(&self, a: &EuclideanPoint, b: &EuclideanPoint, t: f64) -> Result<EuclideanPoint> {
        self.check(a, b)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(format!("geodesic time {t} outside [0, 1]")));
        }
        if t == 0.0 {
            return Ok(a.clone());
        }
        if t == 1.0 {
            return Ok(b.clone());
        }
        Ok(EuclideanPoint(
            a.0.iter().zip(&b.0).map(|(x, y)| (1.0 - t) * x + t * y).collect(),
        ))
    }

    fn barycenter(&self, points: &[&EuclideanPoint], weights: &[f64], init: &EuclideanPoint) -> Result<EuclideanPoint> {
        if points.len() != weights.len() {
            return Err(invalid("barycenter needs one weight per point"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("barycenter weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(init.clone());
        }
        let mut out = vec![0.0; init.dim()];
        for (p, w) in points.iter().zip(weights) {
            self.check(p, init)?;
            for (o, x) in out.iter_mut().zip(&p.0) {
                *o += w * x;
            }
        }
        out.iter_mut().for_each(|o| *o /= total);
        Ok(EuclideanPoint(out))
    }

    fn content_hash(&self, p: &EuclideanPoint) -> u64 {
        let mut h = DefaultHasher::new();
        for x in &p.0 {
            x.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn approx_eq(&self, a: &EuclideanPoint, b: &EuclideanPoint) -> bool {
        a.dim() == b.dim() && a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= EQ_TOL)
    }

    fn project_on_segment(&self, x: &EuclideanPoint, a: &EuclideanPoint, b: &EuclideanPoint) -> Result<(f64, f64)> {
        self.check(x, a)?;
        self.check(a, b)?;
        let ab: f64 = a.0.iter().zip(&b.0).map(|(p, q)| (q - p) * (q - p)).sum();
        let t = if ab > 0.0 {
            let dot: f64 =
                x.0.iter()
                    .zip(&a.0)
                    .zip(&b.0)
                    .map(|((x, p), q)| (x - p) * (q - p))
                    .sum();
            (dot / ab).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d: f64 =
            x.0.iter()
                .zip(&a.0)
                .zip(&b.0)
                .map(|((x, p), q)| {
                    let y = p + t * (q - p);
                    (x - y) * (x - y)
                })
                .sum();
        Ok((t, d.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> EuclideanPoint {
        EuclideanPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pythagoras_and_identity() {
        assert_eq!(Euclidean.dist(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(Euclidean.dist(&p(&[1.5, -2.0]), &p(&[1.5, -2.0])).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Euclidean.dist(&p(&[0.0]), &p(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(EuclideanPoint::new(vec![f64::NAN]), Err(Error::NonFinite(_))));
        assert!(Euclidean.geodesic_point(&p(&[0.0]), &p(&[1.0]), 1.5).is_err());
    }

    #[test]
    fn geodesic() {
        let a = p(&[0.0, 0.0]);
        let b = p(&[2.0, 0.0]);
        assert_eq!(Euclidean.geodesic_point(&a, &b, 0.5).unwrap(), p(&[1.0, 0.0]));
        assert_eq!(Euclidean.geodesic_point(&a, &b, 0.0).unwrap(), a);
    }

    #[test]
    fn weighted_mean() {
        let pts = [p(&[0.0]), p(&[2.0])];
        let refs: Vec<&EuclideanPoint> = pts.iter().collect();
        let m = Euclidean.barycenter(&refs, &[3.0, 1.0], &pts[0]).unwrap();
        assert_eq!(m, p(&[0.5]));
    }

    #[test]
    fn segment_projection() {
        let (t, d) = Euclidean
            .project_on_segment(&p(&[0.5, 1.0]), &p(&[0.0, 0.0]), &p(&[1.0, 0.0]))
            .unwrap();
        assert_eq!((t, d), (0.5, 1.0));
        let (t, d) = Euclidean
            .project_on_segment(&p(&[-1.0, 0.0]), &p(&[0.0, 0.0]), &p(&[1.0, 0.0]))
            .unwrap();
        assert_eq!((t, d), (0.0, 1.0));
    }
}
