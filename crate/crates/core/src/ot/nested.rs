use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::exact::{transport_with_cost, w1_exact, w2_exact, DEFAULT_EXACT_CAP};
use crate::ot::measure::DiscreteMeasure;
use crate::ot::mmd::mmd_gaussian;

/// Uniform measure over finitely many measures (a doubly empirical measure).
#[derive(Debug, Clone, PartialEq)]
pub struct NestedDataset {
    measures: Vec<DiscreteMeasure>,
}

impl NestedDataset {
    pub fn new(measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::Empty("nested dataset"));
        }
        Ok(Self { measures })
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }
}

/// Ground metric between measures used inside the outer transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BaseMetric {
    W1,
    W2,
    Mmd { bandwidth: f64 },
}

impl BaseMetric {
    pub fn eval(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
        match *self {
            BaseMetric::W1 => w1_exact(a, b),
            BaseMetric::W2 => Ok(w2_exact(a, b)?.0),
            BaseMetric::Mmd { bandwidth } => mmd_gaussian(a, b, bandwidth),
        }
    }
}

/// 1-Wasserstein distance between two nested datasets over the chosen base metric.
pub fn nested_w1(a: &NestedDataset, b: &NestedDataset, base: BaseMetric) -> Result<f64> {
    let (m, n) = (a.len(), b.len());
    if m > DEFAULT_EXACT_CAP || n > DEFAULT_EXACT_CAP {
        return Err(Error::SizeCapExceeded {
            rows: m,
            cols: n,
            cap: DEFAULT_EXACT_CAP,
        });
    }
    let rows: Vec<Vec<f64>> = a
        .measures
        .par_iter()
        .map(|x| b.measures.iter().map(|y| base.eval(x, y)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let cost = Matrix::from_fn(m, n, |i, j| rows[i][j]);
    let wa = vec![1.0 / m as f64; m];
    let wb = vec![1.0 / n as f64; n];
    Ok(transport_with_cost(&wa, &wb, &cost, DEFAULT_EXACT_CAP)?.cost.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac(&[x]).unwrap()
    }

    #[test]
    fn identical_sets_are_at_zero() {
        let a = NestedDataset::new(vec![dirac(0.0), dirac(1.0)]).unwrap();
        for base in [BaseMetric::W1, BaseMetric::W2, BaseMetric::Mmd { bandwidth: 1.0 }] {
            assert!(nested_w1(&a, &a, base).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_diracs() {
        let a = NestedDataset::new(vec![dirac(0.0)]).unwrap();
        let b = NestedDataset::new(vec![dirac(1.0)]).unwrap();
        assert!((nested_w1(&a, &b, BaseMetric::W1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_by_enumeration() {
        // Matchings: {0->0, 1->3} = (0 + 2)/2 = 1; {0->3, 1->0} = (3 + 1)/2 = 2.
        let a = NestedDataset::new(vec![dirac(0.0), dirac(1.0)]).unwrap();
        let b = NestedDataset::new(vec![dirac(0.0), dirac(3.0)]).unwrap();
        assert!((nested_w1(&a, &b, BaseMetric::W1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(NestedDataset::new(vec![]).is_err());
    }
}
