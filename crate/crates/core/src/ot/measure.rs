use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-9;

/// A finitely supported probability measure on `R^d`.
///
/// Support points are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = support.first().map(Vec::len).ok_or(Error::Empty("measure support"))?;
        let mut coords = Vec::with_capacity(support.len() * dim);
        for p in support {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Builds a measure from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("measure dimension must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::Empty("measure support"));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                left: coords.len(),
                right: dim * weights.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("measure support"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "measure weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InfeasibleWeights(total));
        }
        Ok(Self { dim, coords, weights })
    }

    /// Uniform measure on the given points.
    pub fn uniform(support: &[Vec<f64>]) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn uniform_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let n = coords.len().checked_div(dim).unwrap_or(0);
        Self::from_flat(dim, coords, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every atom carries the same mass.
    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-12)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points().zip(&self.weights) {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += w * pi;
            }
        }
        m
    }

    /// Total variance `E|X - EX|^2`.
    pub fn total_variance(&self) -> f64 {
        let m = self.mean();
        self.points()
            .zip(&self.weights)
            .map(|(p, w)| w * sq_euclid(p, &m))
            .sum()
    }

    /// Same atoms and weights up to `tol`, in the listed order.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| (a - b).abs() <= tol)
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Atoms with the same location (within `tol`) merged, sorted lexicographically.
    pub fn canonical(&self, tol: f64) -> Self {
        let mut atoms: Vec<(Vec<f64>, f64)> = self
            .points()
            .map(|p| p.to_vec())
            .zip(self.weights.iter().copied())
            .collect();
        atoms.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            match merged.last_mut() {
                Some((q, v)) if q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= tol) => *v += w,
                _ => merged.push((p, w)),
            }
        }
        let coords = merged.iter().flat_map(|(p, _)| p.iter().copied()).collect();
        let weights = merged.into_iter().map(|(_, w)| w).collect();
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// Hash of the exact bit patterns of support and weights.
    pub fn content_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.dim.hash(&mut h);
        for c in &self.coords {
            c.to_bits().hash(&mut h);
        }
        for w in &self.weights {
            w.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub(crate) fn from_parts_unchecked(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        Self { dim, coords, weights }
    }
}

#[inline]
pub(crate) fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
