//! Free-support Wasserstein barycenters by fixed-point iteration.
//!
//! With the barycenter weights held fixed, each iteration solves an exact plan
//! to every input measure and moves each support point to the
//! `lambda`-weighted average of its plan-barycentric targets. Both half-steps
//! minimize `sum_k lambda_k <C(y), P_k>` in one block of variables, so the
//! objective never increases.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ot::exact::{transport_exact, GroundCost, DEFAULT_EXACT_CAP};
use crate::ot::measure::{sq_euclid, DiscreteMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycenterConfig {
    pub max_iter: usize,
    /// Stop once no support point moves farther than this.
    pub tol: f64,
    /// Support size; defaults to the largest input support.
    pub support_size: Option<usize>,
    pub cap: usize,
}

impl Default for BarycenterConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-9,
            support_size: None,
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Barycenter {
    pub measure: DiscreteMeasure,
    /// `sum_k lambda_k W2^2(mu_k, .)` at the start of each iteration, plus the final value.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Barycenter {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }

    pub fn is_monotone(&self) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()))
    }
}

/// Barycenter initialized from the input with the largest weight.
pub fn barycenter(measures: &[&DiscreteMeasure], weights: &[f64], config: &BarycenterConfig) -> Result<Barycenter> {
    check_inputs(measures, weights)?;
    let heaviest = weights
        .iter()
        .enumerate()
        .fold(0, |best, (k, w)| if *w > weights[best] { k } else { best });
    let target = config
        .support_size
        .unwrap_or_else(|| measures.iter().map(|m| m.len()).max().unwrap_or(1));
    let init = split_atoms(measures[heaviest], target);
    barycenter_from(measures, weights, &init, config)
}

/// Barycenter iteration started from an explicit support (and its weights).
pub fn barycenter_from(
    measures: &[&DiscreteMeasure],
    weights: &[f64],
    init: &DiscreteMeasure,
    config: &BarycenterConfig,
) -> Result<Barycenter> {
    check_inputs(measures, weights)?;
    let dim = init.dim();
    if let Some(m) = measures.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: m.dim(),
        });
    }
    let total: f64 = weights.iter().sum();
    let lambda: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let active: Vec<usize> = (0..measures.len()).filter(|&k| lambda[k] > 0.0).collect();

    let mut current = init.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let bw = current.weights().to_vec();

    loop {
        let mut objective = 0.0;
        let mut next = vec![0.0; current.coords().len()];
        for &k in &active {
            let mu = measures[k];
            let plan = transport_exact(&current, mu, GroundCost::SquaredEuclidean, config.cap)?;
            objective += lambda[k] * plan.cost;
            for i in 0..current.len() {
                if bw[i] <= 0.0 {
                    continue;
                }
                let scale = lambda[k] / bw[i];
                let row = plan.coupling.row(i);
                let target = &mut next[i * dim..(i + 1) * dim];
                for (j, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for (t, x) in target.iter_mut().zip(mu.point(j)) {
                        *t += scale * p * x;
                    }
                }
            }
        }
        trace.push(objective);
        if iterations >= config.max_iter {
            break;
        }
        // Zero-mass atoms stay put.
        for i in 0..current.len() {
            if bw[i] <= 0.0 {
                next[i * dim..(i + 1) * dim].copy_from_slice(current.point(i));
            }
        }
        let movement = (0..current.len())
            .map(|i| sq_euclid(&next[i * dim..(i + 1) * dim], current.point(i)).sqrt())
            .fold(0.0, f64::max);
        iterations += 1;
        current = DiscreteMeasure::from_parts_unchecked(dim, next, bw.clone());
        if movement <= config.tol {
            converged = true;
            // One more evaluation records the objective of the final support.
            let mut objective = 0.0;
            for &k in &active {
                objective +=
                    lambda[k] * transport_exact(&current, measures[k], GroundCost::SquaredEuclidean, config.cap)?.cost;
            }
            trace.push(objective);
            break;
        }
    }

    Ok(Barycenter {
        measure: current,
        objective_trace: trace,
        iterations,
        converged,
    })
}

fn check_inputs(measures: &[&DiscreteMeasure], weights: &[f64]) -> Result<()> {
    if measures.is_empty() {
        return Err(Error::Empty("barycenter inputs"));
    }
    if measures.len() != weights.len() {
        return Err(invalid("one weight per measure is required"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid("barycenter weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("barycenter weights sum to zero"));
    }
    Ok(())
}

/// Splits atoms round-robin until the support has `target` points.
fn split_atoms(m: &DiscreteMeasure, target: usize) -> DiscreteMeasure {
    if m.len() >= target {
        return m.clone();
    }
    let n = m.len();
    let mut copies = vec![target / n; n];
    for c in copies.iter_mut().take(target % n) {
        *c += 1;
    }
    let mut coords = Vec::with_capacity(target * m.dim());
    let mut weights = Vec::with_capacity(target);
    for (i, &c) in copies.iter().enumerate() {
        for _ in 0..c {
            coords.extend_from_slice(m.point(i));
            weights.push(m.weights()[i] / c as f64);
        }
    }
    DiscreteMeasure::from_parts_unchecked(m.dim(), coords, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        DiscreteMeasure::uniform(&pts).unwrap()
    }

    #[test]
    fn single_measure_is_its_own_barycenter() {
        let mu = DiscreteMeasure::new(&[vec![0.0, 1.0], vec![2.0, 3.0]], vec![0.25, 0.75]).unwrap();
        let b = barycenter(&[&mu], &[1.0], &BarycenterConfig::default()).unwrap();
        assert!(b.measure.approx_eq(&mu, 1e-15));
        assert!(b.objective() < 1e-20);
    }

    #[test]
    fn dirac_midpoint() {
        let (a, c) = (line(&[0.0]), line(&[2.0]));
        let b = barycenter(&[&a, &c], &[0.5, 0.5], &BarycenterConfig::default()).unwrap();
        assert!((b.measure.coords()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_diracs() {
        // argmin 3/4 a^2 + 1/4 (2 - a)^2 is a = 1/2.
        let (a, c) = (line(&[0.0]), line(&[2.0]));
        let b = barycenter(&[&a, &c], &[0.75, 0.25], &BarycenterConfig::default()).unwrap();
        assert!((b.measure.coords()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_is_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let ms: Vec<DiscreteMeasure> = (0..4)
                .map(|_| {
                    let n = rng.random_range(2..7);
                    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
                    DiscreteMeasure::uniform(&pts).unwrap()
                })
                .collect();
            let refs: Vec<&DiscreteMeasure> = ms.iter().collect();
            let w = [0.1, 0.2, 0.3, 0.4];
            let b = barycenter(&refs, &w, &BarycenterConfig::default()).unwrap();
            assert!(b.is_monotone(), "{:?}", b.objective_trace);
            assert_eq!(b.measure.len(), refs.iter().map(|m| m.len()).max().unwrap());
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(barycenter(&[], &[], &BarycenterConfig::default()).is_err());
    }
}
