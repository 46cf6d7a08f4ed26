use crate::error::{invalid, Error, Result};
use crate::ot::measure::{sq_euclid, DiscreteMeasure};

/// Biased maximum mean discrepancy with Gaussian kernel
/// `k(x, y) = exp(-|x - y|^2 / (2 h^2))`.
pub fn mmd_gaussian(mu: &DiscreteMeasure, nu: &DiscreteMeasure, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(invalid(format!("MMD bandwidth must be positive, got {bandwidth}")));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    let scale = -0.5 / (bandwidth * bandwidth);
    let gram = |p: &DiscreteMeasure, q: &DiscreteMeasure| -> f64 {
        let mut s = 0.0;
        for (x, wx) in p.points().zip(p.weights()) {
            let mut row = 0.0;
            for (y, wy) in q.points().zip(q.weights()) {
                row += wy * (scale * sq_euclid(x, y)).exp();
            }
            s += wx * row;
        }
        s
    };
    let sq = gram(mu, mu) + gram(nu, nu) - 2.0 * gram(mu, nu);
    Ok(sq.max(0.0).sqrt())
}
