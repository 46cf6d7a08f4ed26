use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::seriation::kendall::kendall_tau_error;

/// Estimated ordering of batches, optionally scored against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriationResult {
    pub method: String,
    pub pseudotimes: Vec<f64>,
    /// Batch indices in estimated order.
    pub permutation: Vec<usize>,
    pub error: Option<f64>,
    pub error_up_to_reversal: Option<f64>,
    /// Solver diagnostics such as `disconnected` or `not_converged`.
    pub flags: Vec<String>,
}

impl SeriationResult {
    pub fn from_pseudotimes(method: impl Into<String>, pseudotimes: Vec<f64>) -> Self {
        let mut permutation: Vec<usize> = (0..pseudotimes.len()).collect();
        permutation.sort_by(|&a, &b| pseudotimes[a].total_cmp(&pseudotimes[b]).then(a.cmp(&b)));
        Self {
            method: method.into(),
            pseudotimes,
            permutation,
            error: None,
            error_up_to_reversal: None,
            flags: Vec::new(),
        }
    }

    /// Pseudotimes `rank / (N - 1)` from a batch order.
    pub fn from_order(method: impl Into<String>, order: &[usize]) -> Self {
        let n = order.len();
        let mut pseudotimes = vec![0.0; n];
        for (rank, &b) in order.iter().enumerate() {
            pseudotimes[b] = if n > 1 { rank as f64 / (n - 1) as f64 } else { 0.0 };
        }
        let mut r = Self::from_pseudotimes(method, pseudotimes);
        r.permutation = order.to_vec();
        r
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flags.push(flag.into());
        self
    }

    /// Fills in the raw error and the error up to reversal.
    pub fn evaluate(&mut self, true_times: &[f64]) -> Result<()> {
        let e = kendall_tau_error(&self.pseudotimes, true_times)?;
        self.error = Some(e);
        self.error_up_to_reversal = Some(e.min(1.0 - e));
        Ok(())
    }

    pub fn evaluated(mut self, true_times: &[f64]) -> Result<Self> {
        self.evaluate(true_times)?;
        Ok(self)
    }
}

/// Evenly spaced labels from sort keys; equal keys share their mean rank.
pub fn rank_labels(keys: &[(f64, f64)]) -> Vec<f64> {
    let n = keys.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let cmp = |a: &(f64, f64), b: &(f64, f64)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1));
    idx.sort_by(|&a, &b| cmp(&keys[a], &keys[b]));
    let mut out = vec![0.0; n];
    let scale = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && cmp(&keys[idx[j + 1]], &keys[idx[i]]).is_eq() {
            j += 1;
        }
        let label = (i + j) as f64 / 2.0 * scale;
        for &b in &idx[i..=j] {
            out[b] = label;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_labels() {
        let r = SeriationResult::from_order("tsp", &[2, 0, 1]);
        assert_eq!(r.pseudotimes, vec![0.5, 1.0, 0.0]);
        assert_eq!(r.permutation, vec![2, 0, 1]);
        let r = SeriationResult::from_pseudotimes("x", vec![0.3, 0.1, 0.2])
            .evaluated(&[3.0, 1.0, 2.0])
            .unwrap();
        assert_eq!(r.permutation, vec![1, 2, 0]);
        assert_eq!(r.error, Some(0.0));
        assert_eq!(
            rank_labels(&[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0), (2.0, -1.0)]),
            vec![0.5, 0.0, 0.5, 1.0]
        );
    }
}
