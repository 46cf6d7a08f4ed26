use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::ppc::tsp::solve_path;
use crate::seriation::distance::DistanceMatrix;
use crate::seriation::result::SeriationResult;

/// Convergence tolerance of the eigenvector iteration.
pub const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 200_000;

/// Ordering by a shortest Hamiltonian path through the distance matrix.
pub fn tsp_seriation(w: &DistanceMatrix, fixed_ends: Option<(usize, usize)>) -> Result<SeriationResult> {
    let n = w.len();
    if n < 2 {
        return Err(invalid("seriation needs at least two batches"));
    }
    if let Some((a, b)) = fixed_ends {
        if a >= n || b >= n || a == b {
            return Err(invalid("fixed ends must be two distinct batch indices"));
        }
    }
    let path = solve_path(w.matrix(), fixed_ends.map(|e| e.0), fixed_ends.map(|e| e.1));
    Ok(SeriationResult::from_order("tsp", &path))
}

/// Ordering by the second eigenvector of `D^{-1/2} A D^{-1/2}` with
/// `A = exp(-W^2 / sigma^2)`, rescaled by `D^{-1/2}` before sorting.
pub fn spectral_seriation(w: &DistanceMatrix, sigma: f64) -> Result<SeriationResult> {
    let n = w.len();
    if !(sigma > 0.0) {
        return Err(invalid("spectral bandwidth must be positive"));
    }
    if n < 2 {
        return Err(invalid("seriation needs at least two batches"));
    }
    if n == 2 {
        return Ok(SeriationResult::from_order("spectral", &[0, 1]));
    }
    let a = Matrix::from_fn(n, n, |i, j| (-(w.get(i, j) / sigma).powi(2)).exp());
    let disconnected = (0..n).any(|i| (0..n).filter(|&j| j != i).all(|j| a[(i, j)] < f64::MIN_POSITIVE));
    let d = a.row_sums();
    let dis: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    // S + I shifts the spectrum into [0, 2] so power iteration finds the top of it.
    let s = Matrix::from_fn(n, n, |i, j| {
        dis[i] * a[(i, j)] * dis[j] + if i == j { 1.0 } else { 0.0 }
    });
    let mut top: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    normalize(&mut top);

    // Start from the distances to the most peripheral batch.
    let far = (0..n)
        .max_by(|&i, &j| {
            w.matrix()
                .row(i)
                .iter()
                .sum::<f64>()
                .total_cmp(&w.matrix().row(j).iter().sum::<f64>())
                .then(j.cmp(&i))
        })
        .expect("n > 2");
    let mut v: Vec<f64> = w.matrix().row(far).to_vec();
    deflate(&mut v, &top);
    if normalize(&mut v) == 0.0 {
        v = (0..n).map(|i| i as f64).collect();
        deflate(&mut v, &top);
        normalize(&mut v);
    }
    let mut converged = false;
    let mut next = vec![0.0; n];
    for _ in 0..EIGEN_MAX_ITER {
        for (i, x) in next.iter_mut().enumerate() {
            *x = s.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        deflate(&mut next, &top);
        if normalize(&mut next) == 0.0 {
            break;
        }
        let change = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut next);
        if change < EIGEN_TOL {
            converged = true;
            break;
        }
    }
    v.iter_mut().zip(&dis).for_each(|(x, s)| *x *= s);
    let pivot = (0..n)
        .max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()).then(j.cmp(&i)))
        .expect("n > 2");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]).then(i.cmp(&j)));
    let mut r = SeriationResult::from_order("spectral", &order);
    if disconnected {
        r = r.with_flag("disconnected");
    }
    if !converged {
        r = r.with_flag("not_converged");
    }
    Ok(r)
}

fn deflate(v: &mut [f64], u: &[f64]) {
    let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seriation::kendall::kendall_tau_error_up_to_reversal;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_w(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::new(
            Matrix::from_fn(xs.len(), xs.len(), |i, j| (xs[i] - xs[j]).abs()),
            "euclidean",
        )
        .unwrap()
    }

    #[test]
    fn tsp_examples() {
        let xs = [0.4, 0.1, 0.9, 0.0, 0.6, 0.3, 1.0, 0.75];
        let r = tsp_seriation(&line_w(&xs), None).unwrap();
        assert_eq!(kendall_tau_error_up_to_reversal(&r.pseudotimes, &xs).unwrap(), 0.0);
        let r = tsp_seriation(&line_w(&[1.0, 0.0]), None).unwrap();
        assert_eq!(r.permutation, vec![0, 1]);
        let r = tsp_seriation(&line_w(&xs), Some((2, 5))).unwrap();
        assert_eq!((r.permutation[0], r.permutation[7]), (2, 5));
    }

    #[test]
    fn spectral_three_points() {
        // Oracle: for equispaced points the middle batch has the median entry of the
        // second eigenvector, which is 0 by symmetry.
        let xs = [1.0, 0.0, 2.0];
        for sigma in [0.5, 1.0, 3.0] {
            let r = spectral_seriation(&line_w(&xs), sigma).unwrap();
            assert_eq!(kendall_tau_error_up_to_reversal(&r.pseudotimes, &xs).unwrap(), 0.0);
            assert_eq!(r.pseudotimes[0], 0.5);
        }
        let r = spectral_seriation(&line_w(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(r.permutation, vec![0, 1]);
        assert!(spectral_seriation(&line_w(&xs), 0.0).is_err());
    }

    #[test]
    fn spectral_recovers_noiseless_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..60).map(|_| rng.random()).collect();
        let r = spectral_seriation(&line_w(&xs), 0.3).unwrap();
        assert!(r.flags.is_empty(), "{:?}", r.flags);
        assert_eq!(kendall_tau_error_up_to_reversal(&r.pseudotimes, &xs).unwrap(), 0.0);
    }

    #[test]
    fn spectral_flags_disconnected_graph() {
        let r = spectral_seriation(&line_w(&[0.0, 0.1, 0.2, 1000.0]), 0.1).unwrap();
        assert!(r.flags.contains(&"disconnected".to_string()));
    }

    #[test]
    fn relabelling_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs: Vec<f64> = (0..25).map(|_| rng.random()).collect();
        let w = line_w(&xs);
        let mut perm: Vec<usize> = (0..25).collect();
        perm.shuffle(&mut rng);
        let wp = w.permuted(&perm);
        for f in [
            |w: &DistanceMatrix| spectral_seriation(w, 0.4).unwrap(),
            |w: &DistanceMatrix| tsp_seriation(w, None).unwrap(),
        ] {
            let a = f(&w);
            let b = f(&wp);
            // Batch i of the relabelled problem is batch perm[i] of the original.
            let mapped: Vec<f64> = (0..25).map(|i| a.pseudotimes[perm[i]]).collect();
            let e = kendall_tau_error_up_to_reversal(&b.pseudotimes, &mapped).unwrap();
            assert_eq!(e, 0.0);
        }
    }
}
