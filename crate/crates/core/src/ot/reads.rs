use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::ot::measure::DiscreteMeasure;

const SIMPLEX_TOL: f64 = 1e-9;

pub fn on_simplex(v: &[f64]) -> bool {
    v.iter().all(|&x| x >= -SIMPLEX_TOL) && (v.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// Replaces every support point `v` by the empirical frequencies of `reads`
/// multinomial draws from `v`; atom weights are kept.
pub fn multinomial_reads<R: Rng + ?Sized>(mu: &DiscreteMeasure, reads: u64, rng: &mut R) -> Result<DiscreteMeasure> {
    if reads < 1 {
        return Err(invalid("read count must be at least 1"));
    }
    let d = mu.dim();
    let mut coords = Vec::with_capacity(mu.coords().len());
    let mut counts = vec![0u64; d];
    for v in mu.points() {
        if !on_simplex(v) {
            return Err(Error::NotOnSimplex);
        }
        sample_multinomial(v, reads, rng, &mut counts)?;
        coords.extend(counts.iter().map(|&c| c as f64 / reads as f64));
    }
    DiscreteMeasure::from_flat(d, coords, mu.weights().to_vec())
}

/// Conditional-binomial multinomial sampler.
fn sample_multinomial<R: Rng + ?Sized>(p: &[f64], n: u64, rng: &mut R, out: &mut [u64]) -> Result<()> {
    let mut remaining = n;
    let mut mass = 1.0f64;
    let last = p.len() - 1;
    for (i, &pi) in p.iter().enumerate() {
        let pi = pi.max(0.0);
        if i == last || remaining == 0 {
            out[i] = if i == last { remaining } else { 0 };
            remaining -= out[i];
            continue;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = if q == 0.0 {
            0
        } else if q == 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| invalid(e.to_string()))?
                .sample(rng)
        };
        out[i] = c;
        remaining -= c;
        mass -= pi;
    }
    Ok(())
}
