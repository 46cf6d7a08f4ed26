use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::assignment::solve_assignment;
use crate::ot::measure::{sq_euclid, DiscreteMeasure};
use crate::ot::simplex::solve_transport;

/// Default largest support size handed to the exact solver.
pub const DEFAULT_EXACT_CAP: usize = 512;

/// Tolerance on plan marginals.
pub const MARGINAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundCost {
    /// `|x - y|`
    Euclidean,
    /// `|x - y|^2`
    SquaredEuclidean,
}

/// An optimal coupling together with its transport cost `<C, coupling>`.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub coupling: Matrix,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest deviation of the plan marginals from the given weights.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.coupling.row_sums();
        let c = self.coupling.col_sums();
        r.iter()
            .zip(a)
            .chain(c.iter().zip(b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ground: GroundCost) -> Matrix {
    let mut c = Matrix::zeros(mu.len(), nu.len());
    for (i, x) in mu.points().enumerate() {
        let row = c.row_mut(i);
        for (j, y) in nu.points().enumerate() {
            let d2 = sq_euclid(x, y);
            row[j] = match ground {
                GroundCost::SquaredEuclidean => d2,
                GroundCost::Euclidean => d2.sqrt(),
            };
        }
    }
    c
}

fn is_uniform(w: &[f64]) -> bool {
    let w0 = w[0];
    w.iter().all(|x| (x - w0).abs() <= 1e-12)
}

/// Exact transport for an arbitrary cost matrix.
///
/// Equal-cardinality uniform marginals go to the assignment solver, everything
/// else to the transportation simplex.
pub fn transport_with_cost(a: &[f64], b: &[f64], cost: &Matrix, cap: usize) -> Result<TransportPlan> {
    let (m, n) = (a.len(), b.len());
    if m > cap || n > cap {
        return Err(Error::SizeCapExceeded { rows: m, cols: n, cap });
    }
    if m == 0 || n == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    if m == n && is_uniform(a) && is_uniform(b) {
        let assign = solve_assignment(cost);
        let w = 1.0 / n as f64;
        let mut coupling = Matrix::zeros(n, n);
        let mut total = 0.0;
        for (i, &j) in assign.iter().enumerate() {
            coupling[(i, j)] = w;
            total += cost[(i, j)];
        }
        return Ok(TransportPlan {
            coupling,
            cost: total * w,
        });
    }
    let sol = solve_transport(a, b, cost)?;
    Ok(TransportPlan {
        coupling: sol.flow,
        cost: sol.cost,
    })
}

pub fn transport_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ground: GroundCost,
    cap: usize,
) -> Result<TransportPlan> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    if mu.len() > cap || nu.len() > cap {
        return Err(Error::SizeCapExceeded {
            rows: mu.len(),
            cols: nu.len(),
            cap,
        });
    }
    let c = cost_matrix(mu, nu, ground);
    transport_with_cost(mu.weights(), nu.weights(), &c, cap)
}

/// Exact 2-Wasserstein distance and an optimal plan (squared Euclidean cost).
pub fn w2_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    w2_exact_capped(mu, nu, DEFAULT_EXACT_CAP)
}

pub fn w2_exact_capped(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<(f64, TransportPlan)> {
    let plan = transport_exact(mu, nu, GroundCost::SquaredEuclidean, cap)?;
    Ok((plan.cost.max(0.0).sqrt(), plan))
}

/// Exact 1-Wasserstein distance (Euclidean ground cost).
pub fn w1_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(transport_exact(mu, nu, GroundCost::Euclidean, DEFAULT_EXACT_CAP)?
        .cost
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        DiscreteMeasure::new(&pts, weights.to_vec()).unwrap()
    }

    #[test]
    fn dirac_pair() {
        let a = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[3.0, 4.0]).unwrap();
        assert_eq!(w2_exact(&a, &b).unwrap().0, 5.0);
        assert_eq!(w1_exact(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn two_point_shift() {
        // Enumerating both assignments: {0->2,1->3} costs (4+4)/2, {0->3,1->2} costs (9+1)/2.
        let mu = m(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = m(&[2.0, 3.0], &[0.5, 0.5]);
        let (w, plan) = w2_exact(&mu, &nu).unwrap();
        assert!((w - 2.0).abs() < 1e-15);
        assert_eq!(plan.coupling[(0, 0)], 0.5);
        assert_eq!(plan.coupling[(1, 1)], 0.5);
    }

    #[test]
    fn self_distance_is_zero() {
        let mu = m(&[0.0, 0.3, 2.0], &[0.2, 0.5, 0.3]);
        let (w, plan) = w2_exact(&mu, &mu).unwrap();
        assert_eq!(w, 0.0);
        assert!(plan.marginal_error(mu.weights(), mu.weights()) < MARGINAL_TOL);
        assert_eq!(
            w1_exact(&m(&[0.0, 1.0], &[0.5, 0.5]), &m(&[0.0, 1.0], &[0.5, 0.5])).unwrap(),
            0.0
        );
    }

    #[test]
    fn w1_half_mass_to_midpoint() {
        // Only one coupling exists: both atoms move 0.5.
        let mu = m(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = m(&[0.5], &[1.0]);
        assert!((w1_exact(&mu, &nu).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let mu = DiscreteMeasure::uniform(&vec![vec![0.0]; 4]).unwrap();
        let err = w2_exact_capped(&mu, &mu, 3).unwrap_err();
        assert!(matches!(err, Error::SizeCapExceeded { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let a = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[0.0, 1.0]).unwrap();
        assert!(matches!(w2_exact(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
