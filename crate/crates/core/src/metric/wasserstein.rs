use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metric::{Metric, EQ_TOL};
use crate::ot::barycenter::{barycenter_from, BarycenterConfig};
use crate::ot::exact::{w2_exact_capped, DEFAULT_EXACT_CAP};
use crate::ot::interp::push_plan;
use crate::ot::measure::DiscreteMeasure;
use crate::ot::sinkhorn::{w2_sinkhorn, SinkhornConfig};

/// Solver used for distance evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OtMethod {
    Exact,
    Sinkhorn(SinkhornConfig),
}

/// 2-Wasserstein distance between discrete measures on `R^d`.
///
/// Geodesics and barycenters always use exact plans; `ot` only selects how
/// distances are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Wasserstein {
    pub ot: OtMethod,
    pub cap: usize,
    pub barycenter: BarycenterConfig,
    /// Tolerance on `t` for segment projections.
    pub projection_tol: f64,
}

impl Default for Wasserstein {
    fn default() -> Self {
        Self {
            ot: OtMethod::Exact,
            cap: DEFAULT_EXACT_CAP,
            barycenter: BarycenterConfig {
                max_iter: 20,
                ..BarycenterConfig::default()
            },
            projection_tol: 1e-4,
        }
    }
}

impl Wasserstein {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sinkhorn(cfg: SinkhornConfig) -> Self {
        Self {
            ot: OtMethod::Sinkhorn(cfg),
            ..Self::default()
        }
    }

    fn check(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        Ok(())
    }
}

impl Metric for Wasserstein {
    type Point = DiscreteMeasure;

    fn name(&self) -> &'static str {
        "wasserstein"
    }

    fn validate(&self, p: &DiscreteMeasure) -> Result<()> {
        DiscreteMeasure::from_flat(p.dim(), p.coords().to_vec(), p.weights().to_vec()).map(|_| ())
    }

    fn dist(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
        self.check(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        match &self.ot {
            OtMethod::Exact => Ok(w2_exact_capped(a, b, self.cap)?.0),
            OtMethod::Sinkhorn(cfg) => Ok(w2_sinkhorn(a, b, cfg)?.value),
        }
    }

    /// `W2^2 >= |m_a - m_b|^2 + (s_a - s_b)^2` with means `m` and root total variances `s`.
    fn lower_bound(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
        if a.dim() != b.dim() {
            return 0.0;
        }
        let (ma, mb) = (a.mean(), b.mean());
        let dm: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
        let ds = a.total_variance().max(0.0).sqrt() - b.total_variance().max(0.0).sqrt();
        // Shrink slightly so rounding never lifts the bound above the true value.
        ((dm + ds * ds).sqrt() * (1.0 - 1e-9) - 1e-12).max(0.0)
    }

    fn geodesic_point(&self, a: &DiscreteMeasure, b: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
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
        let (_, plan) = w2_exact_capped(a, b, self.cap)?;
        Ok(push_plan(a, b, &plan, t))
    }

    fn barycenter(
        &self,
        points: &[&DiscreteMeasure],
        weights: &[f64],
        init: &DiscreteMeasure,
    ) -> Result<DiscreteMeasure> {
        if weights.iter().sum::<f64>() <= 0.0 {
            return Ok(init.clone());
        }
        let cfg = BarycenterConfig {
            cap: self.cap,
            ..self.barycenter
        };
        Ok(barycenter_from(points, weights, init, &cfg)?.measure)
    }

    fn content_hash(&self, p: &DiscreteMeasure) -> u64 {
        p.content_hash()
    }

    fn approx_eq(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> bool {
        a.approx_eq(b, EQ_TOL)
    }

    fn cache_worthy(&self) -> bool {
        true
    }

    /// Golden-section search over displacement interpolants of one exact plan.
    fn project_on_segment(&self, x: &DiscreteMeasure, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<(f64, f64)> {
        self.check(x, a)?;
        self.check(a, b)?;
        let da = self.dist(x, a)?;
        if a == b {
            return Ok((0.0, da));
        }
        let db = self.dist(x, b)?;
        let (_, plan) = w2_exact_capped(a, b, self.cap)?;
        let f = |t: f64| self.dist(x, &push_plan(a, b, &plan, t));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        while hi - lo > self.projection_tol {
            if fc <= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = f(c)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = f(d)?;
            }
        }
        let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
        if da <= best.1 {
            best = (0.0, da);
        }
        if db < best.1 {
            best = (1.0, db);
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        DiscreteMeasure::uniform(&pts).unwrap()
    }

    fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        DiscreteMeasure::uniform(&pts).unwrap()
    }

    #[test]
    fn dirac_distance() {
        let w = Wasserstein::default();
        assert_eq!(w.dist(&line(&[0.0]), &line(&[1.0])).unwrap(), 1.0);
        assert_eq!(w.dist(&line(&[0.3, 0.7]), &line(&[0.3, 0.7])).unwrap(), 0.0);
    }

    #[test]
    fn dirac_geodesic() {
        let w = Wasserstein::default();
        let g = w.geodesic_point(&line(&[0.0]), &line(&[2.0]), 0.25).unwrap();
        assert!(w.approx_eq(&g, &line(&[0.5])));
        assert_eq!(
            w.geodesic_point(&line(&[0.0]), &line(&[2.0]), 0.0).unwrap(),
            line(&[0.0])
        );
    }

    #[test]
    fn lower_bound_holds() {
        let w = Wasserstein::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = random_measure(&mut rng, 6, 2);
            let b = random_measure(&mut rng, 4, 2);
            assert!(w.lower_bound(&a, &b) <= w.dist(&a, &b).unwrap());
        }
    }

    #[test]
    fn geodesic_constant_speed() {
        let w = Wasserstein::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = random_measure(&mut rng, 5, 2);
            let b = random_measure(&mut rng, 5, 2);
            let full = w.dist(&a, &b).unwrap();
            let t = rng.random_range(0.0..1.0);
            let g = w.geodesic_point(&a, &b, t).unwrap();
            assert!((w.dist(&a, &g).unwrap() - t * full).abs() < 1e-9);
        }
    }

    #[test]
    fn segment_projection_of_dirac() {
        let w = Wasserstein::default();
        let (t, d) = w
            .project_on_segment(&line(&[0.5]), &line(&[0.0]), &line(&[1.0]))
            .unwrap();
        assert!((t - 0.5).abs() < 1e-4 && d < 1e-4);
        let (t, d) = w
            .project_on_segment(&line(&[-1.0]), &line(&[0.0]), &line(&[1.0]))
            .unwrap();
        assert_eq!((t, d), (0.0, 1.0));
    }

    #[test]
    fn sinkhorn_backend_upper_bounds_exact() {
        let exact = Wasserstein::default();
        let sk = Wasserstein::sinkhorn(SinkhornConfig::with_reg(1e-2));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_measure(&mut rng, 6, 2);
            let b = random_measure(&mut rng, 6, 2);
            let e = exact.dist(&a, &b).unwrap();
            let s = sk.dist(&a, &b).unwrap();
            assert!(s >= e - 1e-12 && s - e < 5e-2, "{s} vs {e}");
        }
    }
}
