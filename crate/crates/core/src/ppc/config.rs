use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Objective variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Local,
    Nonlocal,
}

/// Smoothing kernel `w` on `[-1, 1]`, rescaled as `w_h(t) = w(t / h) / h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `(1 - |t|^p)_+^q`.
    Epanechnikov { p: f64, q: f64 },
    /// Values of `w` at equispaced points of `[0, 1]`, linearly interpolated; zero beyond 1.
    Table(Vec<f64>),
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Epanechnikov { p: 2.0, q: 2.0 }
    }
}

impl Kernel {
    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov { p, q } => (1.0 - a.powf(*p)).max(0.0).powf(*q),
            Kernel::Table(v) => match v.len() {
                0 => 0.0,
                1 => v[0],
                n => {
                    let x = a * (n - 1) as f64;
                    let i = (x.floor() as usize).min(n - 2);
                    let f = x - i as f64;
                    (1.0 - f) * v[i] + f * v[i + 1]
                }
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Epanechnikov { p, q } if *p > 0.0 && *q > 0.0 => Ok(()),
            Kernel::Epanechnikov { .. } => Err(invalid("kernel exponents must be positive")),
            Kernel::Table(v) if !v.is_empty() && v[0] > 0.0 && v.iter().all(|x| x.is_finite() && *x >= 0.0) => Ok(()),
            Kernel::Table(_) => Err(invalid("kernel table must be nonnegative with a positive value at 0")),
        }
    }
}

/// Per-knot bandwidths `h_j`, as fractions of the curve length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Scalar(f64),
    PerKnot(Vec<f64>),
    /// `h_j = h * sqrt(median cell count / cell count_j)`, capped at 1.
    Adaptive(f64),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Scalar(0.037)
    }
}

impl Bandwidth {
    pub fn resolve(&self, cell_counts: &[usize]) -> Result<Vec<f64>> {
        let k = cell_counts.len();
        let h = match self {
            Bandwidth::Scalar(h) => vec![*h; k],
            Bandwidth::PerKnot(v) => {
                if v.len() != k {
                    return Err(invalid(format!("{} bandwidths for {k} knots", v.len())));
                }
                v.clone()
            }
            Bandwidth::Adaptive(h) => {
                let mut sorted = cell_counts.to_vec();
                sorted.sort_unstable();
                let median = if k == 0 {
                    1.0
                } else if k % 2 == 1 {
                    sorted[k / 2] as f64
                } else {
                    (sorted[k / 2 - 1] + sorted[k / 2]) as f64 / 2.0
                };
                cell_counts
                    .iter()
                    .map(|&c| (h * (median.max(1.0) / c.max(1) as f64).sqrt()).min(1.0))
                    .collect()
            }
        };
        if h.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
            return Err(invalid("bandwidths must lie in (0, 1]"));
        }
        Ok(h)
    }
}

/// Solver settings for the coupled Lloyd iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PpcConfig<P> {
    /// Length penalty.
    pub beta: f64,
    /// Number of knots.
    pub k: usize,
    /// Stop when the objective drops by less than this.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Stop when no knot moves farther than this.
    pub movement_tol: f64,
    pub mode: Mode,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    /// Frozen knots by index.
    pub pins: Vec<(usize, P)>,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    /// Memoize distances when the backend is expensive.
    pub use_cache: bool,
}

impl<P> PpcConfig<P> {
    pub fn new(beta: f64, k: usize) -> Self {
        Self {
            beta,
            k,
            epsilon: 1e-7,
            max_outer_iters: 100,
            movement_tol: 1e-7,
            mode: Mode::Local,
            bandwidth: Bandwidth::default(),
            kernel: Kernel::default(),
            pins: Vec::new(),
            seed: 0,
            time_limit: None,
            use_cache: true,
        }
    }

    pub fn nonlocal(mut self, h: f64) -> Self {
        self.mode = Mode::Nonlocal;
        self.bandwidth = Bandwidth::Scalar(h);
        self
    }

    pub fn pinned_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pins.iter().map(|p| p.0).collect();
        v.sort_unstable();
        v
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid("beta must be finite and nonnegative"));
        }
        if self.k == 0 {
            return Err(invalid("need at least one knot"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        if !self.pins.is_empty() && self.k < 2 {
            return Err(invalid("pins need at least two knots"));
        }
        let mut idx = self.pinned_indices();
        let n = idx.len();
        idx.dedup();
        if idx.len() != n {
            return Err(invalid("duplicate pinned index"));
        }
        if idx.last().is_some_and(|&i| i >= self.k) {
            return Err(invalid("pinned index out of range"));
        }
        self.kernel.validate()?;
        if self.mode == Mode::Nonlocal {
            let h = match &self.bandwidth {
                Bandwidth::Scalar(h) | Bandwidth::Adaptive(h) => vec![*h],
                Bandwidth::PerKnot(v) => v.clone(),
            };
            if h.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return Err(invalid("bandwidths must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_shape() {
        let k = Kernel::default();
        assert_eq!(k.eval(0.0), 1.0);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-2.0), 0.0);
        assert!((k.eval(0.5) - 0.5625).abs() < 1e-15);
        let t = Kernel::Table(vec![1.0, 0.5, 0.0]);
        assert!((t.eval(0.25) - 0.75).abs() < 1e-15);
        assert!(Kernel::Table(vec![0.0]).validate().is_err());
    }

    #[test]
    fn bandwidth_rules() {
        assert_eq!(Bandwidth::Scalar(0.1).resolve(&[1, 2]).unwrap(), vec![0.1, 0.1]);
        let a = Bandwidth::Adaptive(0.1).resolve(&[4, 1, 16]).unwrap();
        assert!((a[0] - 0.1).abs() < 1e-15 && (a[1] - 0.2).abs() < 1e-15 && (a[2] - 0.05).abs() < 1e-15);
        assert!(Bandwidth::PerKnot(vec![0.1]).resolve(&[1, 2]).is_err());
        assert!(Bandwidth::Scalar(0.0).resolve(&[1]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c: PpcConfig<f64> = PpcConfig::new(0.1, 3);
        assert!(c.validate().is_ok());
        c.pins = vec![(3, 0.0)];
        assert!(c.validate().is_err());
        c.pins = vec![(0, 0.0), (0, 1.0)];
        assert!(c.validate().is_err());
        let c: PpcConfig<f64> = PpcConfig::new(0.1, 3).nonlocal(0.0);
        assert!(c.validate().is_err());
        assert!(PpcConfig::<f64>::new(-1.0, 3).validate().is_err());
    }
}
